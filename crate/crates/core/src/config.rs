//! Flat `section.key = value` run configuration.
//!
//! Lines are trimmed; blank lines and lines starting with `#` are ignored, as
//! is anything after a `#` on a value line. Every key has a fixed type, and
//! unknown or repeated keys are errors. `grid.n`, `physics.alpha` and
//! `time.t_end` are required; everything else has a default.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::solver::{DiagConfig, InitialCondition, PhysicsParams, RunControl, StepControl, Terms};
use crate::symbols::{sigma_floor, GFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GKindChoice {
    Constant,
    IteratedLog,
}

/// Parameters of the magnetic diffusion weight. For `Constant`, `ctilde`
/// is the constant value and the other fields are unused.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GChoice {
    pub kind: GKindChoice,
    pub k: u32,
    pub sigma: f64,
    pub ctilde: f64,
    pub exponent: f64,
}

impl GChoice {
    pub fn build(&self) -> Result<GFunction> {
        match self.kind {
            GKindChoice::Constant => GFunction::constant(self.ctilde),
            GKindChoice::IteratedLog => {
                GFunction::iterated_log(self.k, self.sigma, self.ctilde, self.exponent)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Zero,
    OrszagTang,
    SingleMode,
    Random,
}

/// Sweep for `verify-kernel`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSweep {
    pub s: Vec<f64>,
    pub k: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    /// Order `δ` of the `‖Λ^{2−δ} K‖_{L¹}` column.
    pub delta: f64,
    /// Grid size of the `L¹` column; `0` leaves it empty.
    pub l1_n: usize,
    /// Allowed deviation of the corrected exponent from `−(s+1)/2`.
    pub tolerance: f64,
}

/// Survey for `verify-besov`.
#[derive(Clone, Debug, PartialEq)]
pub struct BesovSweep {
    pub fields: usize,
    pub kmax: i64,
    pub grids: Vec<usize>,
    /// `(α, q)` pairs.
    pub pairs: Vec<(f64, f64)>,
    /// Allowed relative spread of the fitted constant across grids.
    pub tolerance: f64,
}

/// Envelope and usage check for `verify-gronwall`; the horizon is `time.t_end`.
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallSetup {
    pub k: u32,
    pub alpha0: f64,
    pub a0: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub f: f64,
    pub samples: usize,
    /// Diagnostics CSV to run the usage check on.
    pub series: Option<PathBuf>,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub length: f64,
    pub alpha: f64,
    pub g: GChoice,
    pub terms: Terms,
    pub t_end: f64,
    pub cfl: f64,
    /// Fixed step; the CFL controller is used when absent.
    pub dt: Option<f64>,
    pub dt_max: f64,
    pub init: InitKind,
    pub seed: u64,
    pub amplitude: f64,
    pub k0: f64,
    pub diag: DiagConfig,
    pub diag_every: u64,
    pub csv: PathBuf,
    pub checkpoint_every: u64,
    pub checkpoint_path: PathBuf,
    pub kernel: KernelSweep,
    pub besov: BesovSweep,
    pub gronwall: GronwallSetup,
}

const KEYS: [&str; 49] = [
    "grid.n",
    "domain.length",
    "physics.alpha",
    "physics.g.kind",
    "physics.g.k",
    "physics.g.sigma",
    "physics.g.ctilde",
    "physics.g.exponent",
    "physics.nonlinear",
    "physics.velocity_dissipation",
    "physics.magnetic_diffusion",
    "time.t_end",
    "time.cfl",
    "time.dt",
    "time.dt_max",
    "init.kind",
    "init.seed",
    "init.amplitude",
    "init.k0",
    "diag.q",
    "diag.s",
    "diag.r",
    "diag.every",
    "output.csv",
    "output.checkpoint_every",
    "output.checkpoint_path",
    "kernel.s",
    "kernel.k",
    "kernel.t_min",
    "kernel.t_max",
    "kernel.t_count",
    "kernel.delta",
    "kernel.l1_n",
    "kernel.tolerance",
    "besov.fields",
    "besov.kmax",
    "besov.grids",
    "besov.pairs",
    "besov.tolerance",
    "gronwall.k",
    "gronwall.alpha0",
    "gronwall.a0",
    "gronwall.l",
    "gronwall.m",
    "gronwall.n",
    "gronwall.f",
    "gronwall.samples",
    "gronwall.series",
    "gronwall.sigma",
];

const REQUIRED: [&str; 3] = ["grid.n", "physics.alpha", "time.t_end"];

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.0.get(key).map(|(line, v)| (*line, v.as_str()))
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| config_err(format!("line {line}: cannot parse {key} = {v:?}"))),
        }
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| config_err(format!("line {line}: cannot parse {key} = {v:?}"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| {
                    config_err(format!(
                        "line {line}: {key} must be a comma-separated list of numbers"
                    ))
                }),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(config_err(msg()))
    }
}

fn split_entries(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(format!(
                "line {line_no}: expected `key = value`"
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(config_err(format!("line {line_no}: unknown key {key}")));
        }
        if value.is_empty() {
            return Err(config_err(format!("line {line_no}: empty value for {key}")));
        }
        if map
            .insert(key.to_string(), (line_no, value.to_string()))
            .is_some()
        {
            return Err(config_err(format!("line {line_no}: duplicate key {key}")));
        }
    }
    Ok(Entries(map))
}

fn parse_list_usize(e: &Entries, key: &str, default: &[usize]) -> Result<Vec<usize>> {
    match e.raw(key) {
        None => Ok(default.to_vec()),
        Some((line, v)) => v
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| {
                config_err(format!(
                    "line {line}: {key} must be a comma-separated list of integers"
                ))
            }),
    }
}

fn parse_pairs(e: &Entries, key: &str, default: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    match e.raw(key) {
        None => Ok(default.to_vec()),
        Some((line, v)) => v
            .split(',')
            .map(|item| {
                let (a, q) = item.split_once(':')?;
                Some((a.trim().parse().ok()?, q.trim().parse().ok()?))
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                config_err(format!(
                    "line {line}: {key} must be a list of alpha:q pairs"
                ))
            }),
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let e = split_entries(text)?;
    for key in REQUIRED {
        if e.raw(key).is_none() {
            return Err(config_err(format!("missing required key {key}")));
        }
    }

    let n: usize = e.get("grid.n", 0)?;
    check(n >= 8 && n.is_multiple_of(2), || {
        format!("grid.n must be even and >= 8, got {n}")
    })?;
    let length: f64 = e.get("domain.length", 2.0 * PI)?;
    check(length > 0.0 && length.is_finite(), || {
        format!("domain.length must be positive, got {length}")
    })?;
    let alpha: f64 = e.get("physics.alpha", 0.0)?;
    check(alpha > 0.0 && alpha.is_finite(), || {
        format!("physics.alpha must be positive, got {alpha}")
    })?;

    let kind = match e.get("physics.g.kind", String::from("constant"))?.as_str() {
        "constant" => GKindChoice::Constant,
        "iterated_log" => GKindChoice::IteratedLog,
        other => {
            return Err(config_err(format!(
                "physics.g.kind must be constant or iterated_log, got {other}"
            )))
        }
    };
    let k: u32 = e.get("physics.g.k", 1)?;
    let floor = sigma_floor(k).map_err(|err| config_err(format!("physics.g.k: {err}")))?;
    let g = GChoice {
        kind,
        k,
        sigma: e.get("physics.g.sigma", floor)?,
        ctilde: e.get("physics.g.ctilde", 1.0)?,
        exponent: e.get("physics.g.exponent", 0.5)?,
    };
    g.build()
        .map_err(|err| config_err(format!("physics.g: {err}")))?;
    let terms = Terms {
        nonlinear: e.get("physics.nonlinear", true)?,
        velocity_dissipation: e.get("physics.velocity_dissipation", true)?,
        magnetic_diffusion: e.get("physics.magnetic_diffusion", true)?,
    };

    let t_end: f64 = e.get("time.t_end", -1.0)?;
    check(t_end >= 0.0 && t_end.is_finite(), || {
        format!("time.t_end must be nonnegative, got {t_end}")
    })?;
    let cfl: f64 = e.get("time.cfl", 0.4)?;
    check(cfl > 0.0 && cfl <= 1.0, || {
        format!("time.cfl must lie in (0, 1], got {cfl}")
    })?;
    let dt: Option<f64> = e.opt("time.dt")?;
    if let Some(dt) = dt {
        check(dt > 0.0 && dt.is_finite(), || {
            format!("time.dt must be positive, got {dt}")
        })?;
    }
    let dt_max: f64 = e.get("time.dt_max", 0.01)?;
    check(dt_max > 0.0 && dt_max.is_finite(), || {
        format!("time.dt_max must be positive, got {dt_max}")
    })?;

    let init = match e.get("init.kind", String::from("orszag_tang"))?.as_str() {
        "zero" => InitKind::Zero,
        "orszag_tang" => InitKind::OrszagTang,
        "single_mode" => InitKind::SingleMode,
        "random" => InitKind::Random,
        other => {
            return Err(config_err(format!(
                "init.kind must be zero, orszag_tang, single_mode or random, got {other}"
            )))
        }
    };
    let seed = e.get("init.seed", 0u64)?;
    let amplitude: f64 = e.get("init.amplitude", 1.0)?;
    check(amplitude.is_finite(), || {
        "init.amplitude must be finite".into()
    })?;
    check(init != InitKind::Random || amplitude >= 0.0, || {
        "init.amplitude is the energy of random data and must be nonnegative".into()
    })?;
    let k0: f64 = e.get("init.k0", 4.0)?;
    check(k0 > 0.0, || format!("init.k0 must be positive, got {k0}"))?;

    let diag = DiagConfig {
        q: e.get("diag.q", 4.0)?,
        s: e.get("diag.s", 2.0)?,
        r: e.get("diag.r", 0.5 * alpha)?,
    };
    diag.validate()
        .map_err(|err| config_err(format!("diag: {err}")))?;
    check(diag.r < alpha || diag.r == 0.0, || {
        format!("diag.r must lie in [0, alpha), got {}", diag.r)
    })?;
    let diag_every = e.get("diag.every", 10u64)?;

    let kernel = KernelSweep {
        s: e.list("kernel.s", &[0.0, 1.0])?,
        k: e.list("kernel.k", &[0.0])?,
        t_min: e.get("kernel.t_min", 1e-6)?,
        t_max: e.get("kernel.t_max", 1e-1)?,
        t_count: e.get("kernel.t_count", 16)?,
        delta: e.get("kernel.delta", 0.0)?,
        l1_n: e.get("kernel.l1_n", 0)?,
        tolerance: e.get("kernel.tolerance", 0.03)?,
    };
    check(kernel.t_min > 0.0 && kernel.t_max > kernel.t_min, || {
        "kernel needs 0 < t_min < t_max".into()
    })?;
    check(kernel.t_count >= 2, || {
        "kernel.t_count must be at least 2".into()
    })?;
    check(
        !kernel.s.is_empty() && kernel.s.iter().all(|s| *s > -1.0),
        || "kernel.s must be a nonempty list of values > -1".into(),
    )?;
    check(
        !kernel.k.is_empty() && kernel.k.iter().all(|k| *k >= 0.0),
        || "kernel.k must be a nonempty list of nonnegative values".into(),
    )?;
    let (s_min, k_max) = (
        kernel.s.iter().copied().fold(f64::INFINITY, f64::min),
        kernel.k.iter().copied().fold(0.0, f64::max),
    );
    check(s_min > k_max - 1.0, || {
        format!("kernel moments need s > k - 1 for every pair, got s = {s_min} with k = {k_max}")
    })?;
    check((0.0..1.0).contains(&kernel.delta), || {
        format!("kernel.delta must lie in [0, 1), got {}", kernel.delta)
    })?;
    check(kernel.l1_n == 0 || kernel.l1_n >= 256, || {
        "kernel.l1_n must be 0 or at least 256".into()
    })?;
    check(kernel.tolerance > 0.0, || {
        "kernel.tolerance must be positive".into()
    })?;

    let besov = BesovSweep {
        fields: e.get("besov.fields", 200)?,
        kmax: e.get("besov.kmax", 16)?,
        grids: parse_list_usize(&e, "besov.grids", &[128, 256])?,
        pairs: parse_pairs(&e, "besov.pairs", &[(0.5, 2.0), (0.5, 4.0), (0.25, 4.0)])?,
        tolerance: e.get("besov.tolerance", 0.2)?,
    };
    check(besov.fields > 0 && besov.kmax > 0, || {
        "besov.fields and besov.kmax must be positive".into()
    })?;
    check(
        !besov.grids.is_empty() && besov.grids.iter().all(|&g| g >= 8 && g.is_multiple_of(2)),
        || "besov.grids must list even sizes >= 8".into(),
    )?;
    check(
        !besov.pairs.is_empty()
            && besov
                .pairs
                .iter()
                .all(|&(a, q)| a > 0.0 && a < 1.0 && q >= 2.0 && q.is_finite()),
        || "besov.pairs needs alpha in (0, 1) and q in [2, inf)".into(),
    )?;
    check(besov.tolerance > 0.0, || {
        "besov.tolerance must be positive".into()
    })?;

    let gk: u32 = e.get("gronwall.k", 1)?;
    let gfloor = sigma_floor(gk).map_err(|err| config_err(format!("gronwall.k: {err}")))?;
    let gronwall = GronwallSetup {
        k: gk,
        alpha0: e.get("gronwall.alpha0", gfloor.max(2.0))?,
        a0: e.get("gronwall.a0", E.powf(E.powf(E)))?,
        l: e.get("gronwall.l", 0.0)?,
        m: e.get("gronwall.m", 0.0)?,
        n: e.get("gronwall.n", 1.0)?,
        f: e.get("gronwall.f", 0.0)?,
        samples: e.get("gronwall.samples", 100)?,
        series: e.opt::<String>("gronwall.series")?.map(PathBuf::from),
        sigma: e.get("gronwall.sigma", gfloor)?,
    };
    check(
        [gronwall.l, gronwall.m, gronwall.n, gronwall.f]
            .iter()
            .all(|c| *c >= 0.0 && c.is_finite()),
        || "gronwall coefficients must be nonnegative".into(),
    )?;
    check(gronwall.sigma >= gfloor * (1.0 - 1e-12), || {
        format!(
            "gronwall.sigma = {} is below sigma({gk}) = {gfloor}",
            gronwall.sigma
        )
    })?;
    check(gronwall.samples > 0, || {
        "gronwall.samples must be positive".into()
    })?;

    Ok(RunConfig {
        n,
        length,
        alpha,
        g,
        terms,
        t_end,
        cfl,
        dt,
        dt_max,
        init,
        seed,
        amplitude,
        k0,
        diag,
        diag_every,
        csv: PathBuf::from(e.get("output.csv", String::from("diagnostics.csv"))?),
        checkpoint_every: e.get("output.checkpoint_every", 0u64)?,
        checkpoint_path: PathBuf::from(
            e.get("output.checkpoint_path", String::from("checkpoint.bin"))?,
        ),
        kernel,
        besov,
        gronwall,
    })
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Writes every key explicitly; `parse_config` of the result reproduces `config`.
pub fn serialize_config(config: &RunConfig) -> String {
    let c = config;
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    put("grid.n", c.n.to_string());
    put("domain.length", format!("{:?}", c.length));
    put("physics.alpha", format!("{:?}", c.alpha));
    put(
        "physics.g.kind",
        match c.g.kind {
            GKindChoice::Constant => "constant",
            GKindChoice::IteratedLog => "iterated_log",
        }
        .into(),
    );
    put("physics.g.k", c.g.k.to_string());
    put("physics.g.sigma", format!("{:?}", c.g.sigma));
    put("physics.g.ctilde", format!("{:?}", c.g.ctilde));
    put("physics.g.exponent", format!("{:?}", c.g.exponent));
    put("physics.nonlinear", c.terms.nonlinear.to_string());
    put(
        "physics.velocity_dissipation",
        c.terms.velocity_dissipation.to_string(),
    );
    put(
        "physics.magnetic_diffusion",
        c.terms.magnetic_diffusion.to_string(),
    );
    put("time.t_end", format!("{:?}", c.t_end));
    put("time.cfl", format!("{:?}", c.cfl));
    if let Some(dt) = c.dt {
        put("time.dt", format!("{dt:?}"));
    }
    put("time.dt_max", format!("{:?}", c.dt_max));
    put(
        "init.kind",
        match c.init {
            InitKind::Zero => "zero",
            InitKind::OrszagTang => "orszag_tang",
            InitKind::SingleMode => "single_mode",
            InitKind::Random => "random",
        }
        .into(),
    );
    put("init.seed", c.seed.to_string());
    put("init.amplitude", format!("{:?}", c.amplitude));
    put("init.k0", format!("{:?}", c.k0));
    put("diag.q", format!("{:?}", c.diag.q));
    put("diag.s", format!("{:?}", c.diag.s));
    put("diag.r", format!("{:?}", c.diag.r));
    put("diag.every", c.diag_every.to_string());
    put("output.csv", c.csv.display().to_string());
    put("output.checkpoint_every", c.checkpoint_every.to_string());
    put(
        "output.checkpoint_path",
        c.checkpoint_path.display().to_string(),
    );
    put("kernel.s", join(&c.kernel.s));
    put("kernel.k", join(&c.kernel.k));
    put("kernel.t_min", format!("{:?}", c.kernel.t_min));
    put("kernel.t_max", format!("{:?}", c.kernel.t_max));
    put("kernel.t_count", c.kernel.t_count.to_string());
    put("kernel.delta", format!("{:?}", c.kernel.delta));
    put("kernel.l1_n", c.kernel.l1_n.to_string());
    put("kernel.tolerance", format!("{:?}", c.kernel.tolerance));
    put("besov.fields", c.besov.fields.to_string());
    put("besov.kmax", c.besov.kmax.to_string());
    put("besov.grids", join(&c.besov.grids));
    put(
        "besov.pairs",
        c.besov
            .pairs
            .iter()
            .map(|(a, q)| format!("{a:?}:{q:?}"))
            .collect::<Vec<_>>()
            .join(", "),
    );
    put("besov.tolerance", format!("{:?}", c.besov.tolerance));
    put("gronwall.k", c.gronwall.k.to_string());
    put("gronwall.alpha0", format!("{:?}", c.gronwall.alpha0));
    put("gronwall.a0", format!("{:?}", c.gronwall.a0));
    put("gronwall.l", format!("{:?}", c.gronwall.l));
    put("gronwall.m", format!("{:?}", c.gronwall.m));
    put("gronwall.n", format!("{:?}", c.gronwall.n));
    put("gronwall.f", format!("{:?}", c.gronwall.f));
    put("gronwall.samples", c.gronwall.samples.to_string());
    if let Some(p) = &c.gronwall.series {
        put("gronwall.series", p.display().to_string());
    }
    put("gronwall.sigma", format!("{:?}", c.gronwall.sigma));
    out
}

impl RunConfig {
    pub fn g_function(&self) -> Result<GFunction> {
        self.g.build()
    }

    pub fn physics(&self) -> Result<PhysicsParams> {
        Ok(PhysicsParams::new(self.alpha, self.g_function()?)?.with_terms(self.terms))
    }

    pub fn initial_condition(&self) -> InitialCondition {
        match self.init {
            InitKind::Zero => InitialCondition::Zero,
            InitKind::OrszagTang => InitialCondition::OrszagTang {
                amplitude: self.amplitude,
            },
            InitKind::SingleMode => InitialCondition::SingleMode {
                amplitude: self.amplitude,
            },
            InitKind::Random => InitialCondition::Random {
                seed: self.seed,
                energy: self.amplitude,
                k0: self.k0,
            },
        }
    }

    pub fn run_control(&self) -> RunControl {
        RunControl {
            t_end: self.t_end,
            step: match self.dt {
                Some(dt) => StepControl::Fixed(dt),
                None => StepControl::Cfl {
                    cfl: self.cfl,
                    dt_max: self.dt_max,
                },
            },
            diag_every: self.diag_every,
            checkpoint_every: self.checkpoint_every,
            diag: self.diag,
        }
    }
}
