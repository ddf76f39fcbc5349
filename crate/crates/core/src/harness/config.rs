//! Experiment configuration: flat `section.key = value` lines with `#`
//! comments. Every key is validated before anything is computed, and
//! unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::network::{Topology, TopologyConfig};
use crate::prox::{CompositeTerm, Domain, Regularizer};

/// Key/value pairs in file order of first appearance, with line numbers.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    origin: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |reason: String| Error::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                reason,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `section.key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key.split_once('.') {
                Some((s, k)) if !s.is_empty() && !k.is_empty() && !k.contains('.') => {}
                _ => return Err(parse_err(format!("key `{key}` is not of the form `section.key`"))),
            }
            if value.is_empty() {
                return Err(parse_err(format!("`{key}` has no value")));
            }
            if entries.insert(key.to_string(), (value.to_string(), line_no)).is_some() {
                return Err(parse_err(format!("`{key}` is set twice")));
            }
        }
        Ok(RawConfig {
            origin: origin.to_path_buf(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn origin(&self) -> &Path {
        &self.origin
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Overrides (or adds) a key, as a sweep does for each value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (value.into(), 0));
    }
}

/// Typed reads that remember which keys were consumed.
struct Reader {
    entries: BTreeMap<String, (String, usize)>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?.ok_or_else(|| Error::config(key, "required key is missing"))
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            Some((key, _)) => Err(Error::config(key, "unknown key")),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveKind {
    /// Seeded random quadratics with exact global condition number.
    Quadratic {
        d: usize,
        condition: f64,
        heterogeneity: f64,
        aligned: bool,
    },
    /// Logistic regression with ridge on a LibSVM file, rows dealt round-robin.
    Logistic { data: PathBuf, dim: Option<usize>, ridge: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub kind: ObjectiveKind,
    pub seed: u64,
    pub term: CompositeTerm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RoundsRule {
    Fixed(usize),
    Theorem,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IterationsRule {
    Fixed(usize),
    /// `⌈4 √(L_g/μ_g) ln(1/ε)⌉`
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// Always run all `N` iterations.
    Iterations,
    /// Stop early once `‖x̄^k − x*‖² ≤ ε`.
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceRule {
    /// Closed form when available, otherwise centralized proximal gradient.
    Auto,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmConfig {
    pub rounds: RoundsRule,
    pub iterations: IterationsRule,
    pub epsilon: f64,
    pub stop: StopRule,
    /// Scalar broadcast or explicit `d`-vector; `None` means zero.
    pub x0: Option<Vec<f64>>,
    pub reference: ReferenceRule,
    pub reference_tol: f64,
    pub reference_max_iter: usize,
    /// Bound on `‖∇F(1 ⊗ x*)‖` when no reference solution is computed.
    pub grad_norm_at_opt_bound: Option<f64>,
    /// Bound on `‖x0 − x*‖` when no reference solution is computed.
    pub initial_distance_bound: Option<f64>,
    pub exec: Exec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub topology: TopologyConfig,
    /// Rounds examined by the χ certificate; defaults to one full period.
    pub certify_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub schedule_dump: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub network: NetworkConfig,
    pub algorithm: AlgorithmConfig,
    pub output: OutputConfig,
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::config(key, format!("cannot parse `{t}`: {e}")))
        })
        .collect()
}

/// A scalar is broadcast to `d` coordinates; a list must have length `d`.
fn vector_or_scalar(key: &str, s: &str, d: Option<usize>) -> Result<Vec<f64>> {
    let v = parse_list(key, s)?;
    match (v.len(), d) {
        (1, Some(d)) => Ok(vec![v[0]; d]),
        (n, Some(d)) if n != d => Err(Error::config(key, format!("expected 1 or {d} values, got {n}"))),
        _ => Ok(v),
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(&RawConfig::load(path)?)
    }

    /// Relative paths (`problem.data`, `output.dir`) resolve against the
    /// directory holding the config file.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let base = raw.origin.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |p: String| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let mut r = Reader {
            entries: raw.entries.clone(),
        };

        let kind_name: String = r.or("problem.kind", "quadratic".to_string())?;
        let seed: u64 = r.or("problem.seed", 0)?;
        let kind = match kind_name.as_str() {
            "quadratic" => {
                let d: usize = r.required("problem.d")?;
                if d == 0 {
                    return Err(Error::config("problem.d", "must be at least 1"));
                }
                let condition: f64 = r.or("problem.condition", 10.0)?;
                if !(condition >= 1.0 && condition.is_finite()) {
                    return Err(Error::config("problem.condition", "must be finite and >= 1"));
                }
                let heterogeneity: f64 = r.or("problem.heterogeneity", 1.0)?;
                if !(heterogeneity >= 1.0 && heterogeneity.is_finite()) {
                    return Err(Error::config("problem.heterogeneity", "must be finite and >= 1"));
                }
                ObjectiveKind::Quadratic {
                    d,
                    condition,
                    heterogeneity,
                    aligned: r.or("problem.aligned", false)?,
                }
            }
            "logistic" => ObjectiveKind::Logistic {
                data: resolve(r.required("problem.data")?),
                dim: r.parse("problem.d")?,
                ridge: positive("problem.ridge", r.or("problem.ridge", 0.1)?)?,
            },
            other => return Err(Error::config("problem.kind", format!("unknown objective `{other}`"))),
        };
        let dim_hint = match &kind {
            ObjectiveKind::Quadratic { d, .. } => Some(*d),
            ObjectiveKind::Logistic { dim, .. } => *dim,
        };

        let reg = match r.or("problem.regularizer", "zero".to_string())?.as_str() {
            "zero" => Regularizer::Zero,
            "l1" => Regularizer::L1 {
                weight: r.or("problem.l1", 0.1)?,
            },
            "elastic-net" => Regularizer::ElasticNet {
                l1: r.or("problem.l1", 0.1)?,
                l2: r.or("problem.l2", 0.1)?,
            },
            other => return Err(Error::config("problem.regularizer", format!("unknown regularizer `{other}`"))),
        };
        let domain = match r.or("problem.domain", "all".to_string())?.as_str() {
            "all" | "all-space" => Domain::AllSpace,
            "box" => {
                let need = |k: &str| Error::config(k, "box domain needs a dimension; set problem.d");
                let d = dim_hint.ok_or_else(|| need("problem.box_lo"))?;
                let lo = r.required::<String>("problem.box_lo")?;
                let hi = r.required::<String>("problem.box_hi")?;
                Domain::Box {
                    lo: vector_or_scalar("problem.box_lo", &lo, Some(d))?,
                    hi: vector_or_scalar("problem.box_hi", &hi, Some(d))?,
                }
            }
            "ball" => {
                let d = dim_hint.ok_or_else(|| Error::config("problem.ball_radius", "ball domain needs problem.d"))?;
                let radius = r.required("problem.ball_radius")?;
                let center = match r.take("problem.ball_center") {
                    Some(c) => vector_or_scalar("problem.ball_center", &c, Some(d))?,
                    None => vec![0.0; d],
                };
                Domain::Ball { center, radius }
            }
            other => return Err(Error::config("problem.domain", format!("unknown domain `{other}`"))),
        };
        let term = CompositeTerm::new(reg, domain)?;
        if let Some(d) = dim_hint {
            term.check_dim(d).map_err(|e| Error::config("problem.domain", e.to_string()))?;
        }

        let m: usize = r.required("network.m")?;
        if m == 0 {
            return Err(Error::config("network.m", "must be at least 1"));
        }
        let topology: Topology = r.or("network.topology", Topology::Ring)?;
        let mut tc = TopologyConfig::new(m, topology);
        tc.p_drop = r.or("network.p_drop", 0.0)?;
        if !(0.0..1.0).contains(&tc.p_drop) {
            return Err(Error::config("network.p_drop", "must lie in [0, 1)"));
        }
        tc.lazy = r.or("network.lazy", false)?;
        tc.seed = r.or("network.seed", seed)?;
        tc.chords = r.or("network.chords", tc.chords)?;
        tc.period = r.or("network.period", tc.period)?;
        if tc.period == 0 {
            return Err(Error::config("network.period", "must be at least 1"));
        }
        let certify_samples: Option<usize> = r.parse("network.certify_samples")?;
        if certify_samples == Some(0) {
            return Err(Error::config("network.certify_samples", "must be at least 1"));
        }

        let rounds = match r.take("algorithm.T") {
            None => RoundsRule::Theorem,
            Some(v) if v == "theorem" => RoundsRule::Theorem,
            Some(v) => RoundsRule::Fixed(
                v.parse()
                    .map_err(|_| Error::config("algorithm.T", format!("expected an integer or `theorem`, got `{v}`")))?,
            ),
        };
        let iterations = match r.take("algorithm.N") {
            None => IterationsRule::Auto,
            Some(v) if v == "auto" => IterationsRule::Auto,
            Some(v) => IterationsRule::Fixed(
                v.parse()
                    .map_err(|_| Error::config("algorithm.N", format!("expected an integer or `auto`, got `{v}`")))?,
            ),
        };
        let epsilon: f64 = r.or("algorithm.epsilon", 1e-6)?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::config("algorithm.epsilon", "must lie in (0, 1)"));
        }
        let stop = match r.or("algorithm.stop", "iterations".to_string())?.as_str() {
            "iterations" => StopRule::Iterations,
            "target" => StopRule::Target,
            other => return Err(Error::config("algorithm.stop", format!("expected `iterations` or `target`, got `{other}`"))),
        };
        let x0 = match r.take("algorithm.x0") {
            Some(v) => Some(vector_or_scalar("algorithm.x0", &v, dim_hint)?),
            None => None,
        };
        let reference = match r.or("algorithm.reference", "auto".to_string())?.as_str() {
            "auto" => ReferenceRule::Auto,
            "none" => ReferenceRule::None,
            other => return Err(Error::config("algorithm.reference", format!("expected `auto` or `none`, got `{other}`"))),
        };
        let reference_tol = positive("algorithm.reference_tol", r.or("algorithm.reference_tol", 1e-12)?)?;
        let reference_max_iter = r.or("algorithm.reference_max_iter", 1_000_000)?;
        let grad_norm_at_opt_bound: Option<f64> = r.parse("algorithm.grad_norm_at_opt_bound")?;
        let initial_distance_bound: Option<f64> = r.parse("algorithm.initial_distance_bound")?;
        let exec = r.or("algorithm.exec", Exec::default())?;

        if reference == ReferenceRule::None {
            if stop == StopRule::Target {
                return Err(Error::config("algorithm.stop", "`target` needs algorithm.reference = auto"));
            }
            if rounds == RoundsRule::Theorem {
                if grad_norm_at_opt_bound.is_none() {
                    return Err(Error::config(
                        "algorithm.grad_norm_at_opt_bound",
                        "T = theorem without a reference solution needs this bound",
                    ));
                }
                if initial_distance_bound.is_none() {
                    return Err(Error::config(
                        "algorithm.initial_distance_bound",
                        "T = theorem without a reference solution needs this bound",
                    ));
                }
            }
        }

        let output = OutputConfig {
            dir: resolve(r.or("output.dir", "out".to_string())?),
            csv: r.or("output.csv", true)?,
            schedule_dump: r.or("output.schedule_dump", false)?,
        };
        r.finish()?;

        Ok(ExperimentConfig {
            problem: ProblemConfig { kind, seed, term },
            network: NetworkConfig {
                topology: tc,
                certify_samples,
            },
            algorithm: AlgorithmConfig {
                rounds,
                iterations,
                epsilon,
                stop,
                x0,
                reference,
                reference_tol,
                reference_max_iter,
                grad_norm_at_opt_bound,
                initial_distance_bound,
                exec,
            },
            output,
        })
    }

    /// Every effective setting as `key = value`, defaults filled in. The
    /// execution policy and output location are left out: they do not
    /// change the computed numbers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        let p = &self.problem;
        match &p.kind {
            ObjectiveKind::Quadratic {
                d,
                condition,
                heterogeneity,
                aligned,
            } => {
                put("problem.kind", "quadratic".into());
                put("problem.d", d.to_string());
                put("problem.condition", condition.to_string());
                put("problem.heterogeneity", heterogeneity.to_string());
                put("problem.aligned", aligned.to_string());
            }
            ObjectiveKind::Logistic { data, dim, ridge } => {
                put("problem.kind", "logistic".into());
                put("problem.data", data.display().to_string());
                if let Some(d) = dim {
                    put("problem.d", d.to_string());
                }
                put("problem.ridge", ridge.to_string());
            }
        }
        put("problem.seed", p.seed.to_string());
        put("problem.regularizer", p.term.regularizer().to_string());
        match *p.term.regularizer() {
            Regularizer::Zero => {}
            Regularizer::L1 { weight } => put("problem.l1", weight.to_string()),
            Regularizer::ElasticNet { l1, l2 } => {
                put("problem.l1", l1.to_string());
                put("problem.l2", l2.to_string());
            }
        }
        put("problem.domain", p.term.domain().to_string());
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        match p.term.domain() {
            Domain::AllSpace => {}
            Domain::Box { lo, hi } => {
                put("problem.box_lo", join(lo));
                put("problem.box_hi", join(hi));
            }
            Domain::Ball { center, radius } => {
                put("problem.ball_center", join(center));
                put("problem.ball_radius", radius.to_string());
            }
        }
        let t = &self.network.topology;
        put("network.m", t.m.to_string());
        put("network.topology", t.topology.to_string());
        put("network.p_drop", t.p_drop.to_string());
        put("network.lazy", t.lazy.to_string());
        put("network.seed", t.seed.to_string());
        if t.topology == Topology::RingChords {
            put("network.chords", t.chords.to_string());
        }
        put("network.period", t.period.to_string());
        if let Some(s) = self.network.certify_samples {
            put("network.certify_samples", s.to_string());
        }
        let a = &self.algorithm;
        put(
            "algorithm.T",
            match a.rounds {
                RoundsRule::Fixed(t) => t.to_string(),
                RoundsRule::Theorem => "theorem".into(),
            },
        );
        put(
            "algorithm.N",
            match a.iterations {
                IterationsRule::Fixed(n) => n.to_string(),
                IterationsRule::Auto => "auto".into(),
            },
        );
        put("algorithm.epsilon", a.epsilon.to_string());
        put(
            "algorithm.stop",
            match a.stop {
                StopRule::Iterations => "iterations".into(),
                StopRule::Target => "target".into(),
            },
        );
        put("algorithm.x0", a.x0.as_deref().map_or("0".to_string(), join));
        put(
            "algorithm.reference",
            match a.reference {
                ReferenceRule::Auto => "auto".into(),
                ReferenceRule::None => "none".into(),
            },
        );
        put("algorithm.reference_tol", a.reference_tol.to_string());
        if let Some(b) = a.grad_norm_at_opt_bound {
            put("algorithm.grad_norm_at_opt_bound", b.to_string());
        }
        if let Some(b) = a.initial_distance_bound {
            put("algorithm.initial_distance_bound", b.to_string());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_raw(&RawConfig::parse(text, Path::new("/tmp/exp.cfg"))?)
    }

    const MINIMAL: &str = "problem.d = 3\nnetwork.m = 4\n";

    #[test]
    fn defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.network.topology.topology, Topology::Ring);
        assert_eq!(c.algorithm.rounds, RoundsRule::Theorem);
        assert_eq!(c.algorithm.iterations, IterationsRule::Auto);
        assert_eq!(c.output.dir, PathBuf::from("/tmp/out"));
        assert_eq!(c.problem.term, CompositeTerm::zero());
    }

    #[test]
    fn comments_and_spacing() {
        let c = parse("# header\n  problem.d=2   # inline\n\nnetwork.m =  3\nalgorithm.T = 4\nalgorithm.N = 10\n").unwrap();
        assert_eq!(c.algorithm.rounds, RoundsRule::Fixed(4));
        assert_eq!(c.algorithm.iterations, IterationsRule::Fixed(10));
    }

    #[test]
    fn malformed_lines_name_the_line() {
        match RawConfig::parse("problem.d = 2\nnonsense\n", Path::new("x.cfg")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            RawConfig::parse("d = 2\n", Path::new("x.cfg")),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            RawConfig::parse("a.b = 1\na.b = 2\n", Path::new("x.cfg")),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn errors_name_keys() {
        assert_eq!(key_of(parse("network.m = 4\n").unwrap_err()), "problem.d");
        assert_eq!(key_of(parse("problem.d = 3\n").unwrap_err()), "network.m");
        assert_eq!(key_of(parse(&format!("{MINIMAL}network.p_drop = 1.5\n")).unwrap_err()), "network.p_drop");
        assert_eq!(key_of(parse(&format!("{MINIMAL}algorithm.T = lots\n")).unwrap_err()), "algorithm.T");
        assert_eq!(key_of(parse(&format!("{MINIMAL}problem.colour = red\n")).unwrap_err()), "problem.colour");
        assert_eq!(key_of(parse(&format!("{MINIMAL}problem.box_lo = 1,2\nproblem.domain = box\nproblem.box_hi = 3\n")).unwrap_err()), "problem.box_lo");
    }

    #[test]
    fn unsupported_pair_is_rejected() {
        let e = parse(&format!("{MINIMAL}problem.regularizer = l1\nproblem.domain = ball\nproblem.ball_radius = 1\n"))
            .unwrap_err();
        assert!(matches!(e, Error::UnsupportedPair { .. }));
        assert!(e.to_string().contains("l1") && e.to_string().contains("ball"));
    }

    #[test]
    fn theorem_without_reference_needs_bounds() {
        let e = parse(&format!("{MINIMAL}algorithm.reference = none\n")).unwrap_err();
        assert_eq!(key_of(e), "algorithm.grad_norm_at_opt_bound");
        let ok = parse(&format!(
            "{MINIMAL}algorithm.reference = none\nalgorithm.grad_norm_at_opt_bound = 3\nalgorithm.initial_distance_bound = 1\n"
        ));
        assert!(ok.is_ok());
    }

    #[test]
    fn echo_round_trips() {
        let text = format!(
            "{MINIMAL}problem.regularizer = l1\nproblem.l1 = 0.25\nproblem.domain = box\nproblem.box_lo = -1\nproblem.box_hi = 2\nalgorithm.x0 = 0.5\nnetwork.p_drop = 0.2\n"
        );
        let c = parse(&text).unwrap();
        let mut raw = RawConfig::parse("", Path::new("/tmp/exp.cfg")).unwrap();
        for (k, v) in c.echo() {
            raw.set(&k, v);
        }
        let back = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(back.problem, c.problem);
        assert_eq!(back.network, c.network);
        assert_eq!(back.algorithm.x0, c.algorithm.x0);
    }
}
