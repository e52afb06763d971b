//! Number representations for the recursion: plain probabilities or natural
//! logarithms, where zero is `-inf`.

pub(crate) trait Domain {
    const ZERO: f64;
    const ONE: f64;
    fn from_prob(p: f64) -> f64;
    fn mul(a: f64, b: f64) -> f64;
    fn add(a: f64, b: f64) -> f64;
    fn to_prob(x: f64) -> f64;
    fn to_log10(x: f64) -> Option<f64>;
}

pub(crate) struct Linear;

impl Domain for Linear {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;

    #[inline]
    fn from_prob(p: f64) -> f64 {
        p
    }

    #[inline]
    fn mul(a: f64, b: f64) -> f64 {
        a * b
    }

    #[inline]
    fn add(a: f64, b: f64) -> f64 {
        a + b
    }

    fn to_prob(x: f64) -> f64 {
        x
    }

    fn to_log10(x: f64) -> Option<f64> {
        (x > 0.0).then(|| x.log10())
    }
}

pub(crate) struct LogSpace;

impl Domain for LogSpace {
    const ZERO: f64 = f64::NEG_INFINITY;
    const ONE: f64 = 0.0;

    #[inline]
    fn from_prob(p: f64) -> f64 {
        p.ln()
    }

    #[inline]
    fn mul(a: f64, b: f64) -> f64 {
        a + b
    }

    /// `ln(e^a + e^b)`, shifted by the larger exponent.
    #[inline]
    fn add(a: f64, b: f64) -> f64 {
        if a == f64::NEG_INFINITY {
            return b;
        }
        if b == f64::NEG_INFINITY {
            return a;
        }
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        hi + (lo - hi).exp().ln_1p()
    }

    fn to_prob(x: f64) -> f64 {
        x.exp()
    }

    fn to_log10(x: f64) -> Option<f64> {
        (x > f64::NEG_INFINITY).then(|| x / std::f64::consts::LN_10)
    }
}
