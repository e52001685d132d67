//! Probability formatting and Criterion E verdicts.

use wzrisk::ci_methods::IntervalResult;
use wzrisk::DualScaleProb;

/// 3 significant digits; a×10^b style outside [1e-4, 0.9999], and 1-… when
/// G is within 1e-4 of one. `sci` picks the separator ("×10^" or "e").
fn fmt_prob(p: &DualScaleProb, sci: &str) -> String {
    let lg = p.log10_g();
    if lg == f64::NEG_INFINITY {
        return "0".into();
    }
    if p.log_q == f64::NEG_INFINITY {
        return "1".into();
    }
    let g = p.g();
    if g > 0.9999 {
        return format!("1-{}", mantissa_exp(p.log10_q(), sci));
    }
    if g < 1e-4 {
        return mantissa_exp(lg, sci);
    }
    let decimals = (2 - g.log10().floor() as i32).max(0) as usize;
    format!("{g:.decimals$}")
}

fn mantissa_exp(l10: f64, sci: &str) -> String {
    let mut b = l10.floor();
    let mut a = 10f64.powf(l10 - b);
    if (a * 100.0).round() >= 1000.0 {
        a /= 10.0;
        b += 1.0;
    }
    format!("{a:.2}{sci}{}", b as i64)
}

/// For terminals: 1.87×10^-79.
pub fn human(p: &DualScaleProb) -> String {
    fmt_prob(p, "×10^")
}

/// For CSV: 1.87e-79.
pub fn plain(p: &DualScaleProb) -> String {
    fmt_prob(p, "e")
}

/// Shortest exact text for a float; exponent form for very small or large
/// magnitudes so CSV columns stay readable.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Criterion E category tied to a horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Cr,
    En,
    Vu,
}

impl Category {
    pub fn for_horizon(t: f64) -> Option<Self> {
        if t == 25.5 {
            Some(Category::Cr)
        } else if t == 42.5 {
            Some(Category::En)
        } else if t == 100.0 {
            Some(Category::Vu)
        } else {
            None
        }
    }

    pub fn threshold(self) -> f64 {
        match self {
            Category::Cr => 0.5,
            Category::En => 0.2,
            Category::Vu => 0.1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Cr => "CR",
            Category::En => "EN",
            Category::Vu => "VU",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Met,
    NotMet,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Met => "met",
            Verdict::NotMet => "not met",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

pub fn verdict(r: &IntervalResult, cat: Category) -> Verdict {
    let thr = cat.threshold().ln();
    if r.lower.log_g >= thr {
        Verdict::Met
    } else if r.upper.log_g < thr {
        Verdict::NotMet
    } else {
        Verdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(g: f64) -> DualScaleProb {
        DualScaleProb::from_log_g(g.ln())
    }

    #[test]
    fn formats() {
        assert_eq!(plain(&p(0.5)), "0.500");
        assert_eq!(plain(&p(0.007)), "0.00700");
        assert_eq!(plain(&p(0.12345)), "0.123");
        assert_eq!(plain(&p(1.8728e-79)), "1.87e-79");
        assert_eq!(human(&p(5e-9)), "5.00×10^-9");
        assert_eq!(plain(&p(9.996e-5)), "1.00e-4");
        assert_eq!(plain(&DualScaleProb::from_log_q((3.74e-11f64).ln())), "1-3.74e-11");
        assert_eq!(plain(&DualScaleProb::from_log_g(f64::NEG_INFINITY)), "0");
    }

    #[test]
    fn numbers_roundtrip() {
        for x in [0.0, 1.5, -2.5e-52, 3.152447739332059e-52, 1e300, 1e-4, 0.1 + 0.2] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(3.15e-52), "3.15e-52");
        assert_eq!(num(25.5), "25.5");
    }

    #[test]
    fn categories() {
        assert_eq!(Category::for_horizon(42.5), Some(Category::En));
        assert_eq!(Category::for_horizon(50.0), None);
    }
}
