use crate::model::{VarId, UNASSIGNED};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Unassigned,
    Evidence,
    Cutset,
}

/// The instantiation currently recorded during a query: evidence plus the
/// cutset values chosen on the path from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recorder {
    states: Vec<usize>,
    provenance: Vec<Provenance>,
}

impl Recorder {
    pub fn new(n: usize) -> Self {
        Recorder {
            states: vec![UNASSIGNED; n],
            provenance: vec![Provenance::Unassigned; n],
        }
    }

    pub fn reset(&mut self) {
        self.states.fill(UNASSIGNED);
        self.provenance.fill(Provenance::Unassigned);
    }

    pub fn record_evidence(&mut self, var: VarId, state: usize) {
        self.states[var] = state;
        self.provenance[var] = Provenance::Evidence;
    }

    /// Records a cutset value. Evidence is never overwritten.
    #[inline]
    pub fn record(&mut self, var: VarId, state: usize) {
        debug_assert_ne!(self.provenance[var], Provenance::Evidence);
        self.states[var] = state;
        self.provenance[var] = Provenance::Cutset;
    }

    #[inline]
    pub fn unrecord(&mut self, var: VarId) {
        debug_assert_eq!(self.provenance[var], Provenance::Cutset);
        self.states[var] = UNASSIGNED;
        self.provenance[var] = Provenance::Unassigned;
    }

    #[inline]
    pub fn is_recorded(&self, var: VarId) -> bool {
        self.states[var] != UNASSIGNED
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.is_recorded(var).then(|| self.states[var])
    }

    pub fn provenance(&self, var: VarId) -> Provenance {
        self.provenance[var]
    }

    /// One entry per variable, [`UNASSIGNED`] where nothing is recorded.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn evidence(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.provenance
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == Provenance::Evidence)
            .map(|(v, _)| (v, self.states[v]))
    }

    /// Only evidence remains recorded.
    pub fn is_evidence_only(&self) -> bool {
        self.provenance.iter().all(|p| *p != Provenance::Cutset)
    }
}
