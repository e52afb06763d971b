//! Variable sets as sorted, deduplicated vectors of ids.

use crate::model::VarId;

pub fn union(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub fn intersection(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

pub fn difference(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect()
}

pub fn is_subset(a: &[VarId], b: &[VarId]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        assert_eq!(union(&[1, 3, 5], &[2, 3, 6]), vec![1, 2, 3, 5, 6]);
        assert_eq!(intersection(&[1, 3, 5], &[2, 3, 5]), vec![3, 5]);
        assert_eq!(difference(&[1, 3, 5], &[3]), vec![1, 5]);
        assert!(is_subset(&[], &[1]));
        assert!(is_subset(&[1, 5], &[1, 3, 5]));
        assert!(!is_subset(&[2], &[1, 3]));
    }
}
