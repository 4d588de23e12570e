//! Bound functionals and rate expressions for the maximal deviation.
//!
//! The two-sided rates for independent (and negatively correlated)
//! coordinates carry unspecified universal constants; everything here
//! evaluates the bracketed expressions with constant 1 and is labelled
//! accordingly. The chaining/Dudley bounds use the covering machinery.

use crate::process::MeanRule;
use serde::Serialize;

/// Result of probing a supremum functional over a mean sequence.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeResult {
    pub value: f64,
    /// The running supremum was still growing at the probe horizon.
    pub diverging: bool,
    pub argmax: u64,
    pub probe_depth: u64,
}

/// Probe indices 1..=1000 densely, then geometrically up to `depth`.
fn probe_points(depth: u64) -> Vec<u64> {
    let mut pts: Vec<u64> = (1..=1000.min(depth)).collect();
    let mut j = 1000f64;
    while (j as u64) < depth {
        j *= 1.05;
        pts.push((j as u64).min(depth));
    }
    pts.dedup();
    pts
}

fn probe_sup(rule: &MeanRule, depth: u64, term: impl Fn(u64, f64) -> f64) -> ProbeResult {
    let mut best = 0.0f64;
    let mut argmax = 0u64;
    let pts = probe_points(depth);
    for &j in &pts {
        let p = rule.mean(j);
        if p.is_nan() || p <= 0.0 {
            continue;
        }
        let v = term(j, p);
        if v > best {
            best = v;
            argmax = j;
        }
    }
    // diverging if the supremum is still being attained in the last
    // decade of the probe horizon
    let diverging = argmax > 0 && (argmax as f64) > 0.1 * depth as f64;
    ProbeResult {
        value: best,
        diverging,
        argmax,
        probe_depth: depth,
    }
}

/// `T(p) = sup_j log(j+1) / log(1/p_j)`; finite iff the deviation of the
/// product measure vanishes.
pub fn functional_t(rule: &MeanRule, depth: u64) -> ProbeResult {
    probe_sup(rule, depth, |j, p| ((j + 1) as f64).ln() / (1.0 / p).ln())
}

/// `S(p) = sup_j p_j log(j+1)`; sets the `sqrt(S/n)` decay rate.
pub fn functional_s(rule: &MeanRule, depth: u64) -> ProbeResult {
    probe_sup(rule, depth, |j, p| p * ((j + 1) as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `n sup_j 2 j p_j > 1`.
    Large,
    /// otherwise.
    Small,
}

/// The two-regime rate for independent coordinates, evaluated up to the
/// (withheld) universal constants. Returns the regime flag and the raw
/// bracketed expression.
pub fn independent_rate(rule: &MeanRule, n: u64, depth: u64) -> (Regime, f64) {
    let boundary = probe_sup(rule, depth, |j, p| 2.0 * j as f64 * p);
    if (n as f64) * boundary.value > 1.0 {
        let s = functional_s(rule, depth).value;
        let second = probe_sup(rule, depth, |j, p| {
            let lj = ((j + 1) as f64).ln();
            lj / (n as f64 * (2.0 + lj / (n as f64 * p)).ln())
        });
        let rate = ((s / n as f64).sqrt() + second.value).min(1.0);
        (Regime::Large, rate)
    } else {
        let sum: f64 = probe_points(depth).iter().map(|&j| rule.mean(j)).sum();
        (Regime::Small, (1.0 / n as f64).min(sum))
    }
}

/// Chaining machinery over a covering curve `eps -> N_xi_upper(eps)`.
#[derive(Debug, Clone, Serialize)]
pub struct ChainingBound {
    /// `(eps, eps + sqrt(log(N(eps)+1)/n))` per grid point.
    pub curve: Vec<(f64, f64)>,
    /// Grid infimum of the curve.
    pub infimum: f64,
    /// `1 ∧ sqrt(log(n (1 + C_mu)) / n)`.
    pub closed_form: f64,
}

pub fn chaining_bound(cover: &[(f64, u64)], c_mu: f64, n: u64) -> ChainingBound {
    let curve: Vec<(f64, f64)> = cover
        .iter()
        .map(|&(e, nx)| (e, e + ((nx as f64 + 1.0).ln() / n as f64).sqrt()))
        .collect();
    let infimum = curve.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let closed_form = ((n as f64 * (1.0 + c_mu)).ln() / n as f64).sqrt().min(1.0);
    ChainingBound {
        curve,
        infimum,
        closed_form,
    }
}

/// `24 D_mu / sqrt(n)`, the subgaussian chaining (Dudley) bound.
pub fn dudley_bound(d_mu: f64, n: u64) -> f64 {
    assert!(d_mu >= 0.0 && n >= 1);
    24.0 * d_mu / (n as f64).sqrt()
}

/// Divergence evidence: packing sizes at a fixed scale across growing
/// truncations. If they keep growing, the scale's floor `eps^2 / 6`
/// becomes a candidate lower bound for every `n` (finite truncations
/// cannot certify an infinite covering number, so this is diagnostic).
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceEvidence {
    /// `(eps, floor eps^2/6)` for scales with strictly growing packings.
    pub candidates: Vec<(f64, f64)>,
    /// `(eps, packing size per truncation)` as probed.
    pub trace: Vec<(f64, Vec<u64>)>,
}

pub fn divergence_evidence(
    packings_by_truncation: &[(u64, Vec<(f64, u64)>)],
) -> DivergenceEvidence {
    let mut candidates = Vec::new();
    let mut trace = Vec::new();
    if packings_by_truncation.len() < 3 {
        return DivergenceEvidence { candidates, trace };
    }
    let scales: Vec<f64> = packings_by_truncation[0]
        .1
        .iter()
        .map(|&(e, _)| e)
        .collect();
    for (si, &eps) in scales.iter().enumerate() {
        let sizes: Vec<u64> = packings_by_truncation
            .iter()
            .map(|(_, v)| v[si].1)
            .collect();
        let growing = sizes.windows(2).all(|w| w[1] > w[0]);
        trace.push((eps, sizes));
        if growing {
            candidates.push((eps, eps * eps / 6.0));
        }
    }
    DivergenceEvidence { candidates, trace }
}

/// Everything the rate layer knows about one `(spec, n)` pair.
#[derive(Debug, Clone, Serialize)]
pub struct BoundSet {
    pub n: u64,
    pub t_value: Option<ProbeResult>,
    pub s_value: Option<ProbeResult>,
    pub indep_regime: Option<Regime>,
    /// Rate with constant 1, "up to universal constants".
    pub indep_rate: Option<f64>,
    pub chaining: ChainingBound,
    pub dudley: f64,
    pub lower_candidates: Vec<(f64, f64)>,
}

impl BoundSet {
    pub fn csv_header() -> &'static str {
        "n,t_value,s_value,indep_regime,indep_rate,chaining_infimum,chaining_closed_form,dudley,max_lower_floor"
    }

    pub fn csv_row(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let regime = match self.indep_regime {
            Some(Regime::Large) => "1",
            Some(Regime::Small) => "2",
            None => "",
        };
        let floor = self
            .lower_candidates
            .iter()
            .map(|&(_, f)| f)
            .fold(0.0f64, f64::max);
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            fmt(self.t_value.map(|p| p.value)),
            fmt(self.s_value.map(|p| p.value)),
            regime,
            fmt(self.indep_rate),
            self.chaining.infimum,
            self.chaining.closed_form,
            self.dudley,
            floor
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEPTH: u64 = 1_000_000;

    #[test]
    fn functional_t_powerlaw() {
        // p_j = (j+1)^{-2}: the ratio is identically 1/2
        let r = functional_t(&MeanRule::PowerLaw { exponent: 2.0 }, DEPTH);
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!(!r.diverging);
        // p_j = (j+1)^{-1/alpha} -> alpha
        for alpha in [0.5, 2.0, 3.0] {
            let r = functional_t(
                &MeanRule::PowerLaw {
                    exponent: 1.0 / alpha,
                },
                DEPTH,
            );
            assert!((r.value - alpha).abs() < 1e-9, "alpha {alpha}: {}", r.value);
        }
        // constant p: numerator unbounded, denominator fixed
        let r = functional_t(&MeanRule::Constant { value: 0.3 }, DEPTH);
        assert!(r.diverging, "constant mean must flag divergence");
    }

    #[test]
    fn functional_s_values() {
        // p_j = 1/(j+1): sup log(j+1)/(j+1) at j = 2
        let r = functional_s(&MeanRule::PowerLaw { exponent: 1.0 }, DEPTH);
        assert!((r.value - 3f64.ln() / 3.0).abs() < 1e-12);
        assert_eq!(r.argmax, 2);
        assert!(!r.diverging);
        // p == 0
        let r0 = functional_s(&MeanRule::Constant { value: 0.0 }, DEPTH);
        assert_eq!(r0.value, 0.0);
        // p_j = (j+1)^{-2}: integer max of x^{-2} log x at x = 2
        // (continuous max sits at sqrt(e) between the grid points 1 and 2)
        let r2 = functional_s(&MeanRule::PowerLaw { exponent: 2.0 }, DEPTH);
        assert!((r2.value - 2f64.ln() / 4.0).abs() < 1e-12, "{}", r2.value);
        assert_eq!(r2.argmax, 1);
    }

    #[test]
    fn independent_rate_regimes() {
        // dominated by sqrt(S/n) at large n
        let rule = MeanRule::PowerLaw { exponent: 2.0 };
        let n = 1_000_000;
        let (regime, rate) = independent_rate(&rule, n, DEPTH);
        assert_eq!(regime, Regime::Large);
        let s = functional_s(&rule, DEPTH).value;
        let dominant = (s / n as f64).sqrt();
        assert!(
            rate >= dominant && rate <= 3.0 * dominant,
            "rate {rate} vs {dominant}"
        );
        // p == 0: regime 2 with zero rate
        let (r0, v0) = independent_rate(&MeanRule::Constant { value: 0.0 }, 10, 1000);
        assert_eq!(r0, Regime::Small);
        assert_eq!(v0, 0.0);
        // tiny support far below 1/n: regime 2 returns the mass sum
        let rule = MeanRule::Explicit {
            values: vec![1e-9, 1e-9],
        };
        let (r2, v2) = independent_rate(&rule, 4, 2);
        assert_eq!(r2, Regime::Small);
        assert!((v2 - 2e-9).abs() < 1e-18);
        // the regime flag flips across n sup 2 j p_j = 1
        let rule = MeanRule::Explicit { values: vec![0.01] };
        assert_eq!(independent_rate(&rule, 49, 1).0, Regime::Small);
        assert_eq!(independent_rate(&rule, 51, 1).0, Regime::Large);
    }

    #[test]
    fn chaining_shapes() {
        // N == 1: infimum approaches sqrt(log 2 / n) as eps -> 0
        let cover: Vec<(f64, u64)> = (1..200).map(|i| (1.0 / i as f64, 1)).collect();
        let n = 10_000;
        let cb = chaining_bound(&cover, 1.0, n);
        let want = (2f64.ln() / n as f64).sqrt();
        assert!((cb.infimum - want) < 0.01, "{} vs {}", cb.infimum, want);
        // monotone in n
        let c2 = chaining_bound(&cover, 1.0, 2 * n);
        assert!(c2.infimum <= cb.infimum);
        assert!(c2.closed_form <= cb.closed_form);
    }

    #[test]
    fn dudley_scaling() {
        assert_eq!(dudley_bound(0.0, 5), 0.0);
        let v = dudley_bound(1.3, 100);
        assert!((dudley_bound(1.3, 400) - v / 2.0).abs() < 1e-15);
    }

    #[test]
    fn divergence_evidence_shapes() {
        // growing packings at eps = 0.1 across three truncations
        let data = vec![
            (8u64, vec![(0.4, 2u64), (0.1, 4u64)]),
            (16, vec![(0.4, 2), (0.1, 9)]),
            (32, vec![(0.4, 2), (0.1, 17)]),
        ];
        let ev = divergence_evidence(&data);
        assert_eq!(ev.candidates.len(), 1);
        assert_eq!(ev.candidates[0].0, 0.1);
        assert!((ev.candidates[0].1 - 0.01 / 6.0).abs() < 1e-15);
        // finite view: no evidence
        let flat = vec![
            (8u64, vec![(0.1, 4u64)]),
            (16, vec![(0.1, 4)]),
            (32, vec![(0.1, 4)]),
        ];
        assert!(divergence_evidence(&flat).candidates.is_empty());
    }
}
