//! Flat `key = value` configuration with `#` comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use optimistic::ProblemSpec;

use crate::CliError;

/// Methods the runner knows by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    FirstFixed,
    FirstLs,
    SecondLs,
    PthLs,
    MirrorProx,
}

impl MethodChoice {
    pub const ALL: [MethodChoice; 5] = [
        MethodChoice::FirstFixed,
        MethodChoice::FirstLs,
        MethodChoice::SecondLs,
        MethodChoice::PthLs,
        MethodChoice::MirrorProx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodChoice::FirstFixed => "first-fixed",
            MethodChoice::FirstLs => "first-ls",
            MethodChoice::SecondLs => "second-ls",
            MethodChoice::PthLs => "pth-ls",
            MethodChoice::MirrorProx => "mirror-prox",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            CliError::Config(format!(
                "unknown method '{s}' (expected one of first-fixed, first-ls, second-ls, pth-ls, mirror-prox)"
            ))
        })
    }

    /// First-order budgets differ from the higher-order ones.
    pub fn is_first_order(self) -> bool {
        matches!(self, MethodChoice::FirstFixed | MethodChoice::FirstLs | MethodChoice::MirrorProx)
    }

    pub fn default_iters(self) -> usize {
        if self.is_first_order() {
            1000
        } else {
            500
        }
    }

    pub fn default_eps(self) -> f64 {
        if self.is_first_order() {
            1e-9
        } else {
            1e-10
        }
    }
}

/// Every setting is optional; absent values fall back to per-method defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub problem: Option<String>,
    pub methods: Vec<MethodChoice>,
    pub seed: Option<u64>,
    pub iters: Option<usize>,
    pub eps: Option<f64>,
    pub out: Option<String>,
    pub paper_scale: Option<bool>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub order: Option<usize>,
    pub m_const: Option<f64>,
    pub eta: Option<f64>,
    pub reference: Option<bool>,
    pub repeats: Option<usize>,
    pub sigmas: Vec<f64>,
    pub betas: Vec<f64>,
    // Problem overrides.
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub l1_weight: Option<f64>,
    pub radius: Option<f64>,
    pub l2: Option<f64>,
    pub c: Option<f64>,
    pub c3: Option<f64>,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("bad value for {key}: '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("bad value for {key}: '{v}'"))),
    }
}

pub fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_num(key, s)).collect()
}

pub fn parse_methods(v: &str) -> Result<Vec<MethodChoice>, CliError> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(MethodChoice::parse).collect()
}

/// Splits config text into key/value pairs. Later duplicates win.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value', got '{line}'", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl Settings {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (k, v) in parse_pairs(text)? {
            s.set(&k, &v)?;
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "problem" => self.problem = Some(v.to_string()),
            "method" | "methods" => self.methods = parse_methods(v)?,
            "seed" => self.seed = Some(parse_num(key, v)?),
            "iters" => self.iters = Some(parse_num(key, v)?),
            "eps" => self.eps = Some(parse_num(key, v)?),
            "out" => self.out = Some(v.to_string()),
            "paper_scale" => self.paper_scale = Some(parse_bool(key, v)?),
            "alpha" => self.alpha = Some(parse_num(key, v)?),
            "beta" => self.beta = Some(parse_num(key, v)?),
            "sigma" => self.sigma = Some(parse_num(key, v)?),
            "mu" => self.mu = Some(parse_num(key, v)?),
            "lambda" => self.lambda = Some(parse_num(key, v)?),
            "order" => self.order = Some(parse_num(key, v)?),
            "m_const" => self.m_const = Some(parse_num(key, v)?),
            "eta" => self.eta = Some(parse_num(key, v)?),
            "reference" => self.reference = Some(parse_bool(key, v)?),
            "repeats" => self.repeats = Some(parse_num(key, v)?),
            "sigmas" => self.sigmas = parse_list(key, v)?,
            "betas" => self.betas = parse_list(key, v)?,
            "m" => self.m = Some(parse_num(key, v)?),
            "n" => self.n = Some(parse_num(key, v)?),
            "l1_weight" => self.l1_weight = Some(parse_num(key, v)?),
            "radius" => self.radius = Some(parse_num(key, v)?),
            "l2" => self.l2 = Some(parse_num(key, v)?),
            "c" => self.c = Some(parse_num(key, v)?),
            "c3" => self.c3 = Some(parse_num(key, v)?),
            _ => return Err(CliError::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Values set in `other` replace ours.
    pub fn overlay(mut self, other: Settings) -> Settings {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            problem,
            seed,
            iters,
            eps,
            out,
            paper_scale,
            alpha,
            beta,
            sigma,
            mu,
            lambda,
            order,
            m_const,
            eta,
            reference,
            repeats,
            m,
            n,
            l1_weight,
            radius,
            l2,
            c,
            c3
        );
        if !other.methods.is_empty() {
            self.methods = other.methods;
        }
        if !other.sigmas.is_empty() {
            self.sigmas = other.sigmas;
        }
        if !other.betas.is_empty() {
            self.betas = other.betas;
        }
        self
    }

    /// Problem spec with size and parameter overrides applied.
    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        let name = self.problem.as_deref().ok_or_else(|| CliError::Config("no problem given".into()))?;
        problem_spec_for(self, name)
    }

    /// Serializes the settings back to config text that parses to the same value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {v}");
            }
        };
        let join = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        put("problem", self.problem.clone());
        put(
            "methods",
            (!self.methods.is_empty()).then(|| self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
        );
        put("seed", self.seed.map(|v| v.to_string()));
        put("iters", self.iters.map(|v| v.to_string()));
        put("eps", self.eps.map(|v| v.to_string()));
        put("out", self.out.clone());
        put("paper_scale", self.paper_scale.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("sigma", self.sigma.map(|v| v.to_string()));
        put("mu", self.mu.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("order", self.order.map(|v| v.to_string()));
        put("m_const", self.m_const.map(|v| v.to_string()));
        put("eta", self.eta.map(|v| v.to_string()));
        put("reference", self.reference.map(|v| v.to_string()));
        put("repeats", self.repeats.map(|v| v.to_string()));
        put("sigmas", join(&self.sigmas));
        put("betas", join(&self.betas));
        put("m", self.m.map(|v| v.to_string()));
        put("n", self.n.map(|v| v.to_string()));
        put("l1_weight", self.l1_weight.map(|v| v.to_string()));
        put("radius", self.radius.map(|v| v.to_string()));
        put("l2", self.l2.map(|v| v.to_string()));
        put("c", self.c.map(|v| v.to_string()));
        put("c3", self.c3.map(|v| v.to_string()));
        s
    }
}

/// Spec for `name` under the size and parameter overrides in `s`.
pub fn problem_spec_for(s: &Settings, name: &str) -> Result<ProblemSpec, CliError> {
    let base = if s.paper_scale.unwrap_or(false) { ProblemSpec::paper_scale(name) } else { ProblemSpec::desk(name) };
    let base = base.ok_or_else(|| {
        CliError::Config(format!("unknown problem '{name}' (expected prob1, prob2, prob2_sc, prob_p3)"))
    })?;
    Ok(match base {
        ProblemSpec::Prob1 { m, n, lambda, mu, radius } => ProblemSpec::Prob1 {
            m: s.m.unwrap_or(m),
            n: s.n.unwrap_or(n),
            lambda: s.l1_weight.unwrap_or(lambda),
            mu: s.mu.unwrap_or(mu),
            radius: s.radius.unwrap_or(radius),
        },
        ProblemSpec::Prob2 { n, l2 } => {
            if s.mu.is_some_and(|mu| mu != 0.0) {
                return Err(CliError::Config("prob2 has no strong monotonicity parameter".into()));
            }
            ProblemSpec::Prob2 { n: s.n.or(s.m).unwrap_or(n), l2: s.l2.unwrap_or(l2) }
        }
        ProblemSpec::Prob2Sc { m, n, l2, c, mu } => ProblemSpec::Prob2Sc {
            m: s.m.unwrap_or(m),
            n: s.n.unwrap_or(n),
            l2: s.l2.unwrap_or(l2),
            c: s.c.unwrap_or(c),
            mu: s.mu.unwrap_or(mu),
        },
        ProblemSpec::ProbP3 { m, n, c3, mu } => ProblemSpec::ProbP3 {
            m: s.m.unwrap_or(m),
            n: s.n.unwrap_or(n),
            c3: s.c3.unwrap_or(c3),
            mu: s.mu.unwrap_or(mu),
        },
    })
}
