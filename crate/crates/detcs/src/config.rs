//! Experiment configuration files.
//!
//! INI-style sections `[matrix]`, `[experiment]` and `[algorithms.<name>]`
//! with `key = value` lines and `#` comments. Key names follow the paper's
//! GUI input catalog (n_random, SNRin_min, iteration, ...). Unknown sections
//! and keys are rejected with the offending name and line number.

use std::path::{Path, PathBuf};

use crate::bench::{AlgoSpec, ExperimentConfig, ExperimentKind, MatrixSource};
use crate::recover::Algorithm;
use crate::{Error, Result};

/// mu -> extension degree d of the coefficient vectors: the leading-order
/// Weil bound gives mu ~ (d - 1)/sqrt(m), so a coherence budget of mu admits
/// d = 1 + floor(mu) sum terms.
pub fn choose_degree(mu: f64) -> Result<u32> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::config("mu", "mu must be a finite non-negative number"));
    }
    Ok(1 + mu.floor() as u32)
}

#[derive(Debug)]
struct RawEntry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug)]
struct RawSection {
    name: String,
    line: usize,
    entries: Vec<RawEntry>,
}

fn lex(text: &str, loc: &str) -> Result<Vec<RawSection>> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(inner) = trimmed.strip_prefix('[') {
            let name = inner.strip_suffix(']').ok_or_else(|| {
                Error::config(format!("{loc}:{line}"), "unterminated section header")
            })?;
            sections.push(RawSection {
                name: name.trim().to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            Error::config(format!("{loc}:{line}"), format!("expected key = value, got `{trimmed}`"))
        })?;
        let section = sections.last_mut().ok_or_else(|| {
            Error::config(format!("{loc}:{line}"), "key outside of any [section]")
        })?;
        section.entries.push(RawEntry {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

/// Typed accessor over one section's entries with unknown/duplicate key
/// detection.
struct SectionView<'a> {
    loc: &'a str,
    section: &'a RawSection,
}

impl<'a> SectionView<'a> {
    fn new(loc: &'a str, section: &'a RawSection) -> Self {
        SectionView { loc, section }
    }

    fn entry(&mut self, key: &str) -> Result<Option<&'a RawEntry>> {
        let hits: Vec<&RawEntry> = self
            .section
            .entries
            .iter()
            .filter(|e| e.key == key)
            .collect();
        if hits.len() > 1 {
            return Err(Error::config(
                format!("{}:{}", self.loc, hits[1].line),
                format!("duplicate key `{key}`"),
            ));
        }
        Ok(hits.first().copied())
    }

    fn raw(&mut self, key: &'a str, known: &mut Vec<&'a str>) -> Result<Option<&'a str>> {
        known.push(key);
        Ok(self.entry(key)?.map(|e| e.value.as_str()))
    }

    fn finish(&self, known: &[&str]) -> Result<()> {
        for e in &self.section.entries {
            if !known.iter().any(|&k| k == e.key) {
                return Err(Error::config(
                    format!("{}:{}", self.loc, e.line),
                    format!("unknown key `{}` in section [{}]", e.key, self.section.name),
                ));
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(loc: &str, entry: &RawEntry) -> Result<T> {
    entry.value.parse::<T>().map_err(|_| {
        Error::config(
            format!("{loc}:{}", entry.line),
            format!("key `{}`: cannot parse `{}`", entry.key, entry.value),
        )
    })
}

macro_rules! getters {
    ($($fn_name:ident -> $ty:ty),* $(,)?) => {
        impl<'a> SectionView<'a> {
            $(fn $fn_name(&mut self, key: &'a str, known: &mut Vec<&'a str>) -> Result<Option<$ty>> {
                known.push(key);
                match self.entry(key)? {
                    Some(e) => Ok(Some(parse_num::<$ty>(self.loc, e)?)),
                    None => Ok(None),
                }
            })*
        }
    };
}

getters! {
    get_f64 -> f64,
    get_usize -> usize,
    get_u32 -> u32,
    get_u64 -> u64,
}

fn require<T>(v: Option<T>, loc: &str, section: &str, key: &str) -> Result<T> {
    v.ok_or_else(|| {
        Error::config(loc, format!("section [{section}] requires key `{key}`"))
    })
}

fn parse_matrix_section(loc: &str, section: &RawSection) -> Result<MatrixSource> {
    let mut view = SectionView::new(loc, section);
    let mut known = Vec::new();
    let kind = view.raw("kind", &mut known)?;
    let n_random = view.get_usize("n_random", &mut known)?;
    let m_random = view.get_usize("m_random", &mut known)?;
    let p = view.get_u32("p", &mut known)?;
    let s = view.get_u32("s", &mut known)?;
    let mu = view.get_f64("mu", &mut known)?;
    let degree = view.get_u32("degree", &mut known)?;
    let phi_user = view.raw("Phi_user", &mut known)?;
    view.finish(&known)?;

    // explicit kind wins; otherwise infer from which keys are present
    let kind = match kind {
        Some(k) => k.to_string(),
        None if phi_user.is_some() => "user".to_string(),
        None if p.is_some() => "deterministic".to_string(),
        None => "gaussian".to_string(),
    };
    match kind.as_str() {
        "gaussian" => {
            let n = require(n_random, loc, "matrix", "n_random")?;
            let m = require(m_random, loc, "matrix", "m_random")?;
            if m < 1 || m > n {
                return Err(Error::config(
                    loc,
                    format!("m_random = {m} must satisfy 1 <= m_random <= n_random = {n}"),
                ));
            }
            Ok(MatrixSource::Gaussian { m, n })
        }
        "deterministic" => {
            let n = require(n_random, loc, "matrix", "n_random")?;
            let p = require(p, loc, "matrix", "p")?;
            let s = s.unwrap_or(2);
            let d = match (degree, mu) {
                (Some(d), _) => d,
                (None, Some(mu)) => choose_degree(mu)?,
                (None, None) => {
                    return Err(Error::config(
                        loc,
                        "deterministic matrix requires `mu` or `degree`",
                    ))
                }
            };
            if d < 1 {
                return Err(Error::config(loc, "degree must be >= 1"));
            }
            Ok(MatrixSource::Deterministic { p, s, d, n })
        }
        "user" => {
            let path = require(phi_user, loc, "matrix", "Phi_user")?;
            Ok(MatrixSource::User {
                path: PathBuf::from(path),
            })
        }
        other => Err(Error::config(
            format!("{loc}:{}", section.line),
            format!("unknown matrix kind `{other}`"),
        )),
    }
}

struct ExperimentSection {
    kind: ExperimentKind,
    var_signal: f64,
    var_noise: f64,
    k: Option<usize>,
    snr_in_min: Option<f64>,
    snr_in_max: Option<f64>,
    snr_in: Option<f64>,
    plotting_precision: usize,
    sparsity_max: Option<usize>,
    trials: usize,
    threshold_db: f64,
    master_seed: u64,
    m_step: usize,
}

fn parse_experiment_section(loc: &str, section: &RawSection) -> Result<ExperimentSection> {
    let mut view = SectionView::new(loc, section);
    let mut known = Vec::new();
    let kind = require(view.raw("kind", &mut known)?, loc, "experiment", "kind")?;
    let kind = match kind {
        "phase_transition" => ExperimentKind::PhaseTransition,
        "snr_curve" => ExperimentKind::SnrCurve,
        "sparsity_snr" => ExperimentKind::SparsitySnr,
        "recovery_rate" => ExperimentKind::RecoveryRate,
        other => {
            return Err(Error::config(
                format!("{loc}:{}", section.line),
                format!("unknown experiment kind `{other}`"),
            ))
        }
    };
    let out = ExperimentSection {
        kind,
        var_signal: view.get_f64("var_signal", &mut known)?.unwrap_or(1.0),
        var_noise: view.get_f64("var_noise", &mut known)?.unwrap_or(1.0),
        k: view.get_usize("k", &mut known)?,
        snr_in_min: view.get_f64("SNRin_min", &mut known)?,
        snr_in_max: view.get_f64("SNRin_max", &mut known)?,
        snr_in: view.get_f64("SNR_in", &mut known)?,
        plotting_precision: view.get_usize("plotting_precision", &mut known)?.unwrap_or(30),
        sparsity_max: view.get_usize("Sparsity_max", &mut known)?,
        trials: view.get_usize("iteration", &mut known)?.unwrap_or(500),
        threshold_db: view.get_f64("threshold", &mut known)?.unwrap_or(50.0),
        master_seed: view.get_u64("seed", &mut known)?.unwrap_or(0),
        m_step: view.get_usize("m_step", &mut known)?.unwrap_or(1),
    };
    view.finish(&known)?;
    if out.var_signal <= 0.0 {
        return Err(Error::config(loc, "var_signal must be > 0"));
    }
    if out.var_noise <= 0.0 {
        return Err(Error::config(loc, "var_noise must be > 0"));
    }
    if out.trials < 1 {
        return Err(Error::config(loc, "iteration must be >= 1"));
    }
    if out.plotting_precision < 1 {
        return Err(Error::config(loc, "plotting_precision must be >= 1"));
    }
    if out.m_step < 1 {
        return Err(Error::config(loc, "m_step must be >= 1"));
    }
    Ok(out)
}

fn parse_algorithm_section(loc: &str, name: &str, section: &RawSection) -> Result<AlgoSpec> {
    let mut view = SectionView::new(loc, section);
    let mut known = Vec::new();
    let (algorithm, enhanced) = match name {
        "OMP" | "OMP_enhanced" => {
            let tol = view.get_f64("OMP_tolerance", &mut known)?.unwrap_or(1e-8);
            (Algorithm::Omp { tol }, name.ends_with("_enhanced"))
        }
        "CoSamp" => {
            let tol = view.get_f64("CoSamp_tolerance", &mut known)?.unwrap_or(1e-8);
            let maxiter = view.get_usize("CoSamp_maxiter", &mut known)?.unwrap_or(50);
            (Algorithm::CoSamp { tol, maxiter }, false)
        }
        "CoSamp_enhanced" => {
            let tol = view
                .get_f64("CoSamp_enhanced_tolerance", &mut known)?
                .unwrap_or(1e-8);
            let maxiter = view.get_usize("CoSamp_maxiter", &mut known)?.unwrap_or(50);
            (Algorithm::CoSamp { tol, maxiter }, true)
        }
        "IHT" => {
            let iters = view.get_usize("IHT_iteration", &mut known)?.unwrap_or(1000);
            (Algorithm::Iht { iters }, false)
        }
        "AMP" => {
            let nsweep = view.get_usize("AMP_nsweep", &mut known)?.unwrap_or(200);
            let tol = view.get_f64("AMP_tolerance", &mut known)?.unwrap_or(1e-8);
            let tau = view.get_f64("AMP_tau", &mut known)?.unwrap_or(1.5);
            (Algorithm::Amp { nsweep, tol, tau }, false)
        }
        "IMAT" => {
            let iters = view.get_usize("IMAT_iteration", &mut known)?.unwrap_or(1000);
            let t0 = view.get_f64("IMAT_T0", &mut known)?.unwrap_or(7.5);
            let alfa = view.get_f64("IMAT_Alfa", &mut known)?.unwrap_or(0.333);
            (Algorithm::Imat { t0, alfa, iters }, false)
        }
        "Yall1" => {
            let tol = view.get_f64("Yall1_tolerance", &mut known)?.unwrap_or(1e-7);
            let maxiter = view.get_usize("Yall1_maxiter", &mut known)?.unwrap_or(1000);
            (Algorithm::L1Admm { tol, maxiter }, false)
        }
        other => {
            return Err(Error::config(
                format!("{loc}:{}", section.line),
                format!("unknown algorithm `{other}`"),
            ))
        }
    };
    view.finish(&known)?;
    Ok(AlgoSpec {
        name: name.to_string(),
        algorithm,
        enhanced,
    })
}

/// Parse and validate a configuration document. `loc` is the file name used
/// in error messages.
pub fn parse_config_str(text: &str, loc: &str) -> Result<ExperimentConfig> {
    let sections = lex(text, loc)?;
    let mut source: Option<MatrixSource> = None;
    let mut experiment: Option<ExperimentSection> = None;
    let mut algos: Vec<AlgoSpec> = Vec::new();
    for section in &sections {
        match section.name.as_str() {
            "matrix" => {
                if source.is_some() {
                    return Err(Error::config(
                        format!("{loc}:{}", section.line),
                        "duplicate [matrix] section",
                    ));
                }
                source = Some(parse_matrix_section(loc, section)?);
            }
            "experiment" => {
                if experiment.is_some() {
                    return Err(Error::config(
                        format!("{loc}:{}", section.line),
                        "duplicate [experiment] section",
                    ));
                }
                experiment = Some(parse_experiment_section(loc, section)?);
            }
            name => {
                let algo_name = name.strip_prefix("algorithms.").ok_or_else(|| {
                    Error::config(
                        format!("{loc}:{}", section.line),
                        format!("unknown section [{name}]"),
                    )
                })?;
                let spec = parse_algorithm_section(loc, algo_name, section)?;
                if algos.iter().any(|a| a.name == spec.name) {
                    return Err(Error::config(
                        format!("{loc}:{}", section.line),
                        format!("duplicate algorithm section [{name}]"),
                    ));
                }
                algos.push(spec);
            }
        }
    }
    let source = source.ok_or_else(|| Error::config(loc, "missing [matrix] section"))?;
    let exp = experiment.ok_or_else(|| Error::config(loc, "missing [experiment] section"))?;
    if algos.is_empty() {
        return Err(Error::config(loc, "at least one [algorithms.<name>] section is required"));
    }
    if algos.iter().any(|a| a.enhanced)
        && !matches!(source, MatrixSource::Deterministic { .. })
    {
        return Err(Error::config(
            loc,
            "enhanced algorithms require a deterministic matrix (they run on the block-circulant operator)",
        ));
    }

    // per-kind requirements
    let k = match exp.kind {
        ExperimentKind::SnrCurve => {
            let k = require(exp.k, loc, "experiment", "k")?;
            require(exp.snr_in_min, loc, "experiment", "SNRin_min")?;
            require(exp.snr_in_max, loc, "experiment", "SNRin_max")?;
            k
        }
        ExperimentKind::SparsitySnr => {
            require(exp.snr_in, loc, "experiment", "SNR_in")?;
            require(exp.sparsity_max, loc, "experiment", "Sparsity_max")?;
            exp.k.unwrap_or(1)
        }
        ExperimentKind::RecoveryRate => {
            require(exp.sparsity_max, loc, "experiment", "Sparsity_max")?;
            exp.k.unwrap_or(1)
        }
        ExperimentKind::PhaseTransition => exp.k.unwrap_or(1),
    };
    if let Some((min, max)) = exp.snr_in_min.zip(exp.snr_in_max) {
        if min > max {
            return Err(Error::config(
                loc,
                format!("SNRin_min = {min} must not exceed SNRin_max = {max}"),
            ));
        }
    }
    if let MatrixSource::Gaussian { m, .. } = source {
        if k > m {
            return Err(Error::config(
                loc,
                format!("k = {k} must not exceed m_random = {m}"),
            ));
        }
        if let Some(smax) = exp.sparsity_max {
            if smax >= m {
                return Err(Error::config(
                    loc,
                    format!("Sparsity_max = {smax} must be < m_random = {m}"),
                ));
            }
        }
    }
    Ok(ExperimentConfig {
        kind: exp.kind,
        source,
        algos,
        var_signal: exp.var_signal,
        var_noise: exp.var_noise,
        k,
        snr_in_min: exp.snr_in_min.unwrap_or(40.0),
        snr_in_max: exp.snr_in_max.unwrap_or(100.0),
        snr_in: exp.snr_in,
        plotting_precision: exp.plotting_precision,
        sparsity_max: exp.sparsity_max.unwrap_or(0),
        trials: exp.trials,
        threshold_db: exp.threshold_db,
        master_seed: exp.master_seed,
        m_step: exp.m_step,
    })
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG7: &str = "\
# Fig. 7 setup
[matrix]
n_random = 49
m_random = 25

[experiment]
kind = snr_curve
k = 10
SNRin_min = 40
SNRin_max = 100
plotting_precision = 30
iteration = 1000
seed = 1

[algorithms.Yall1]
Yall1_tolerance = 1e-7

[algorithms.IHT]
IHT_iteration = 1000
";

    #[test]
    fn parses_the_fig7_configuration() {
        let cfg = parse_config_str(FIG7, "mem").unwrap();
        assert_eq!(cfg.kind, ExperimentKind::SnrCurve);
        assert_eq!(cfg.source, MatrixSource::Gaussian { m: 25, n: 49 });
        assert_eq!(cfg.k, 10);
        assert_eq!(cfg.plotting_precision, 30);
        assert_eq!(cfg.trials, 1000);
        assert_eq!(cfg.master_seed, 1);
        assert_eq!(cfg.algos.len(), 2);
        assert_eq!(cfg.algos[0].name, "Yall1");
        assert_eq!(
            cfg.algos[0].algorithm,
            crate::recover::Algorithm::L1Admm { tol: 1e-7, maxiter: 1000 }
        );
        assert_eq!(
            cfg.algos[1].algorithm,
            crate::recover::Algorithm::Iht { iters: 1000 }
        );
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let text = FIG7.replace("plotting_precision = 30", "plotting_prec = 30");
        let err = parse_config_str(&text, "mem").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("plotting_prec") && msg.contains("mem:11"), "{msg}");
    }

    #[test]
    fn unknown_section_rejected() {
        let text = format!("{FIG7}\n[plotting]\nstyle = fancy\n");
        let err = parse_config_str(&text, "mem").unwrap_err().to_string();
        assert!(err.contains("[plotting]"), "{err}");
    }

    #[test]
    fn k_exceeding_m_names_both_keys() {
        let text = FIG7.replace("k = 10", "k = 30");
        let err = parse_config_str(&text, "mem").unwrap_err().to_string();
        assert!(err.contains("k = 30") && err.contains("m_random = 25"), "{err}");
    }

    #[test]
    fn imat_defaults_applied() {
        let text = "\
[matrix]
n_random = 49
m_random = 25

[experiment]
kind = sparsity_snr
SNR_in = 15
Sparsity_max = 20

[algorithms.IMAT]
IMAT_iteration = 10000
";
        let cfg = parse_config_str(text, "mem").unwrap();
        assert_eq!(
            cfg.algos[0].algorithm,
            crate::recover::Algorithm::Imat { t0: 7.5, alfa: 0.333, iters: 10000 }
        );
        assert_eq!(cfg.snr_in, Some(15.0));
        assert_eq!(cfg.sparsity_max, 20);
    }

    #[test]
    fn deterministic_source_with_mu() {
        let text = "\
[matrix]
kind = deterministic
p = 5
mu = 1
n_random = 125

[experiment]
kind = recovery_rate
Sparsity_max = 12

[algorithms.OMP_enhanced]
OMP_tolerance = 1e-8
";
        let cfg = parse_config_str(text, "mem").unwrap();
        assert_eq!(
            cfg.source,
            MatrixSource::Deterministic { p: 5, s: 2, d: 2, n: 125 }
        );
        assert!(cfg.algos[0].enhanced);
    }

    #[test]
    fn enhanced_requires_deterministic() {
        let text = FIG7.replace("[algorithms.IHT]", "[algorithms.OMP_enhanced]")
            .replace("IHT_iteration = 1000", "OMP_tolerance = 1e-8");
        let err = parse_config_str(&text, "mem").unwrap_err().to_string();
        assert!(err.contains("enhanced"), "{err}");
    }

    #[test]
    fn missing_required_keys_are_reported() {
        let cases = [
            ("[experiment]\nkind = snr_curve\nk = 3\nSNRin_min = 10\nSNRin_max = 20\n\n[algorithms.OMP]\n", "matrix"),
            ("[matrix]\nn_random = 49\nm_random = 25\n\n[algorithms.OMP]\n", "experiment"),
            ("[matrix]\nn_random = 49\nm_random = 25\n\n[experiment]\nkind = snr_curve\nSNRin_min = 10\nSNRin_max = 20\n\n[algorithms.OMP]\n", "`k`"),
            ("[matrix]\nn_random = 49\nm_random = 25\n\n[experiment]\nkind = snr_curve\nk = 3\nSNRin_min = 10\nSNRin_max = 20\n", "algorithms"),
            ("[matrix]\nm_random = 25\n\n[experiment]\nkind = recovery_rate\nSparsity_max = 5\n\n[algorithms.OMP]\n", "n_random"),
        ];
        for (text, needle) in cases {
            let err = parse_config_str(text, "mem").unwrap_err().to_string();
            assert!(err.contains(needle), "text {text:?} -> {err}");
        }
    }

    #[test]
    fn range_violations_rejected() {
        let bads = [
            FIG7.replace("SNRin_min = 40", "SNRin_min = 200"),
            FIG7.replace("iteration = 1000", "iteration = 0"),
            FIG7.replace("m_random = 25", "m_random = 50"),
            FIG7.replace("plotting_precision = 30", "plotting_precision = 0"),
            FIG7.replace("k = 10", "k = ten"),
        ];
        for text in &bads {
            assert!(
                matches!(parse_config_str(text, "mem"), Err(Error::Config { .. })),
                "accepted: {text}"
            );
        }
    }

    #[test]
    fn duplicate_keys_and_sections_rejected() {
        let dup_key = FIG7.replace("k = 10", "k = 10\nk = 11");
        assert!(parse_config_str(&dup_key, "mem").is_err());
        let dup_section = format!("{FIG7}\n[experiment]\nkind = snr_curve\n");
        assert!(parse_config_str(&dup_section, "mem").is_err());
        let dup_algo = format!("{FIG7}\n[algorithms.IHT]\n");
        assert!(parse_config_str(&dup_algo, "mem").is_err());
    }

    #[test]
    fn choose_degree_matches_paper_anchor() {
        // paper: mu = 1, p = 5 -> d = 2 (m = 24, n up to 624)
        assert_eq!(choose_degree(1.0).unwrap(), 2);
        assert_eq!(choose_degree(0.3).unwrap(), 1);
        assert_eq!(choose_degree(2.5).unwrap(), 3);
        assert!(choose_degree(-1.0).is_err());
        assert!(choose_degree(f64::NAN).is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = format!("; leading comment\n\n{FIG7}\n# trailing\n");
        assert!(parse_config_str(&text, "mem").is_ok());
    }
}
