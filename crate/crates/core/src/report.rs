//! Artifact emission: CSV/JSON writers with stable formatting and a
//! config-hash stamp, so equal configurations produce byte-identical
//! files regardless of thread count.

use crate::delta::DeltaEstimate;
use crate::process::ProcessSpec;
use std::io::Write;
use std::path::Path;

/// FNV-1a over a canonical config string; stable across platforms and
/// releases (std's hasher is not).
pub fn config_hash(canonical: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canonical.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn write_artifact(path: &Path, content: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())
}

/// Curve rows with full provenance columns.
pub fn delta_csv(spec: &ProcessSpec, estimates: &[DeltaEstimate], hash: u64) -> String {
    use std::fmt::Write;
    let mut out = format!("# config_hash={hash:016x}\n");
    out.push_str("spec,n,estimate,ci_low,ci_high,mode,truncation,seed\n");
    for e in estimates {
        writeln!(
            out,
            "{},{},{},{},{},{:?},{},{}",
            spec.kind_name(),
            e.n,
            e.estimate,
            e.ci_low(),
            e.ci_high(),
            e.mode,
            e.truncation,
            e.master_seed
        )
        .unwrap();
    }
    out
}

/// Canonical string for run configurations; feed to [`config_hash`].
pub fn canonical_config(fields: &[(&str, String)]) -> String {
    let mut parts: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.sort();
    parts.join(";")
}

/// A fixed artifact battery exercising every emitter, used to audit
/// byte-identity across worker thread counts.
pub fn determinism_battery(master: u64, threads: usize) -> Vec<(String, String)> {
    use crate::delta::{convergence_curve, DeltaOptions, EstimatorMode};
    use crate::process::{catalog_specs, KindParams, ProcessSpec};

    let mut artifacts = Vec::new();
    let hash = config_hash(&canonical_config(&[
        ("battery", "v1".into()),
        ("seed", master.to_string()),
    ]));

    let opts = DeltaOptions {
        ci_level: 0.95,
        threads,
        block_horizon: None,
    };
    let nu = ProcessSpec::new(
        KindParams::BlockNu {
            block_size_override: None,
        },
        1 << 62,
    )
    .unwrap();
    let ests =
        convergence_curve(&nu, &[2, 3], 60, EstimatorMode::Collapsed, master, &opts).unwrap();
    artifacts.push(("delta_blocknu.csv".to_string(), delta_csv(&nu, &ests, hash)));

    let mu = ProcessSpec::new(
        KindParams::BlockMu {
            block_size_override: None,
        },
        1 << 62,
    )
    .unwrap();
    let ests =
        convergence_curve(&mu, &[4, 16], 40, EstimatorMode::Collapsed, master, &opts).unwrap();
    artifacts.push(("delta_blockmu.csv".to_string(), delta_csv(&mu, &ests, hash)));

    let chain = catalog_specs()
        .into_iter()
        .find(|(n, _)| *n == "thinchain")
        .unwrap()
        .1;
    let idx: Vec<u64> = (1..=chain.truncation).collect();
    let view = crate::metrics::MetricView::closed_form(&chain, &idx).unwrap();
    let rep = crate::covering::covering_report(&view, &crate::covering::default_grid(0.001), None)
        .unwrap();
    artifacts.push(("cover_thinchain.csv".to_string(), rep.to_csv()));

    let levels: Vec<f64> = (0..7).map(|i| 0.45 * 0.6f64.powi(i)).collect();
    let tree = crate::trees::build_skeleton(&levels, &[1, 2, 7, 10, 13, 14, 15], None).unwrap();
    artifacts.push(("tree.dot".to_string(), tree.export_dot()));
    artifacts.push(("tree.json".to_string(), tree.to_json()));

    let sd = catalog_specs()
        .into_iter()
        .find(|(n, _)| *n == "sqrtdecay")
        .unwrap()
        .1;
    let view = crate::metrics::MetricView::closed_form(&sd, &(1..=32).collect::<Vec<_>>()).unwrap();
    artifacts.push(("view_sqrtdecay.csv".to_string(), view.to_csv()));

    let check = crate::verify::run_check("gamma_delta", master, 1000).unwrap();
    artifacts.push((
        "verify_gamma_delta.json".to_string(),
        serde_json::to_string_pretty(&check).unwrap(),
    ));

    artifacts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_order_free() {
        let a = canonical_config(&[("seed", "7".into()), ("n", "4".into())]);
        let b = canonical_config(&[("n", "4".into()), ("seed", "7".into())]);
        assert_eq!(a, b);
        assert_eq!(config_hash(&a), config_hash(&b));
        // frozen value so accidental algorithm changes surface
        assert_eq!(config_hash("abc"), 0xe71fa2190541574b);
    }
}
