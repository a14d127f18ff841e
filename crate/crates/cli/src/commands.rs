use std::fmt;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use gmhd::besov::{bernstein_check, lower_bound_survey};
use gmhd::config::{parse_config, RunConfig};
use gmhd::fit::fit_scaling;
use gmhd::gronwall::{
    check_estimate_usage, integrate_envelope, Coefficient, EnvelopeOptions, GronwallProblem,
};
use gmhd::io::{read_checkpoint, write_checkpoint};
use gmhd::kernel::{kernel_hs_norm, kernel_l1_norm, kernel_moment, l1_box, moment_envelope};
use gmhd::solver::{simulate as run_simulation, DiagRecord, Observer, SimState, Solver};
use gmhd::symbols::{log_samples, solve_at};
use gmhd::{Error, Grid2D, SpectralField2D};

pub enum Failure {
    Core(Error),
    Csv(csv::Error),
    Usage(String),
    Violation(Vec<String>),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(Error::Config(_)) | Self::Usage(_) => 2,
            Self::Core(Error::BlowUp { .. }) => 4,
            Self::Core(Error::Io(_) | Error::Checkpoint(_)) | Self::Csv(_) => 5,
            Self::Core(_) | Self::Violation(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Core(e) => write!(f, "{e}"),
            Self::Csv(e) => write!(f, "csv: {e}"),
            Self::Usage(msg) => write!(f, "{msg}"),
            Self::Violation(v) => write!(f, "{} violation(s): {}", v.len(), v.join("; ")),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Core(Error::Io(e))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e)
    }
}

type Outcome = Result<(), Failure>;

fn verdict(violations: Vec<String>) -> Outcome {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations))
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let rebase = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    rebase(&mut cfg.csv);
    rebase(&mut cfg.checkpoint_path);
    if let Some(s) = cfg.gronwall.series.as_mut() {
        rebase(s);
    }
    Ok(cfg)
}

fn csv_writer(output: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, Failure> {
    let sink: Box<dyn Write> = match output {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn num(v: f64) -> String {
    v.to_string()
}

struct CsvObserver {
    rows: csv::Writer<File>,
    checkpoint: PathBuf,
    checkpoints: usize,
}

impl Observer for CsvObserver {
    fn record(&mut self, r: &DiagRecord) -> gmhd::Result<()> {
        let mut fields: Vec<String> = r.values().into_iter().map(num).collect();
        fields[1] = r.step.to_string();
        self.rows.write_record(&fields).map_err(csv_to_io)?;
        Ok(())
    }

    fn checkpoint(&mut self, state: &SimState) -> gmhd::Result<()> {
        self.checkpoints += 1;
        write_checkpoint(&self.checkpoint, state)
    }
}

fn csv_to_io(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

pub fn simulate(config: &Path, resume: Option<&Path>) -> Outcome {
    let cfg = load(config)?;
    let params = cfg.physics()?;
    let grid = Grid2D::new(cfg.n, cfg.length)?;
    let initial = match resume {
        Some(path) => {
            let mut s = read_checkpoint(path)?;
            if s.grid() != &grid {
                return Err(Failure::Usage(format!(
                    "checkpoint grid does not match grid.n = {} and domain.length = {}",
                    cfg.n, cfg.length
                )));
            }
            s.params.terms = cfg.terms;
            s
        }
        None => cfg.initial_condition().build(&grid, params)?,
    };
    let solver = Solver::new(&grid, initial.params, cfg.diag.q)?;
    let mut control = cfg.run_control();
    control.t_end = (cfg.t_end - initial.t).max(0.0);
    let t0 = initial.t;

    let mut rows = csv::Writer::from_path(&cfg.csv)?;
    rows.write_record(DiagRecord::FIELDS)?;
    let mut observer = CsvObserver {
        rows,
        checkpoint: cfg.checkpoint_path.clone(),
        checkpoints: 0,
    };
    // The solver clock starts at zero; shift it so resumed runs report absolute time.
    let mut shifted = initial;
    shifted.t = 0.0;
    let result = run_simulation(
        &solver,
        shifted,
        &control,
        &mut ShiftObserver {
            inner: &mut observer,
            t0,
        },
    );
    observer.rows.flush()?;
    match result {
        Ok((mut state, records)) => {
            state.t += t0;
            write_checkpoint(&cfg.checkpoint_path, &state)?;
            let last = records.last().expect("simulate emits at least one row");
            eprintln!(
                "simulated to t = {} in {} steps; energy {:.6e}, budget residual {:.2e}; {} rows, {} checkpoints",
                state.t,
                last.step,
                last.energy,
                last.budget_residual,
                records.len(),
                observer.checkpoints + 1
            );
            let bad: Vec<String> = records
                .iter()
                .filter(|r| !r.all_finite())
                .map(|r| format!("non-finite diagnostics at t = {}", r.t + t0))
                .collect();
            verdict(bad)
        }
        Err(Error::BlowUp {
            t,
            step,
            mut snapshot,
        }) => {
            snapshot.t += t0;
            write_checkpoint(&cfg.checkpoint_path, &snapshot)?;
            Err(Error::BlowUp {
                t: t + t0,
                step,
                snapshot,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

struct ShiftObserver<'a> {
    inner: &'a mut CsvObserver,
    t0: f64,
}

impl Observer for ShiftObserver<'_> {
    fn record(&mut self, r: &DiagRecord) -> gmhd::Result<()> {
        let mut r = r.clone();
        r.t += self.t0;
        self.inner.record(&r)
    }

    fn checkpoint(&mut self, state: &SimState) -> gmhd::Result<()> {
        let mut s = state.clone();
        s.t += self.t0;
        self.inner.checkpoint(&s)
    }
}

pub fn verify_kernel(config: &Path, output: Option<&Path>) -> Outcome {
    let cfg = load(config)?;
    let sweep = &cfg.kernel;
    let g = cfg.g_function()?;
    let ts = log_samples(sweep.t_min.log10(), sweep.t_max.log10(), sweep.t_count);
    let mut out = csv_writer(output)?;
    out.write_record([
        "t", "s", "k", "moment", "hs_norm", "l1_norm", "envelope", "ratio", "g_at",
    ])?;

    let mut g_at = Vec::with_capacity(ts.len());
    let mut l1 = Vec::with_capacity(ts.len());
    for &t in &ts {
        g_at.push(g.eval(solve_at(&g, t)?));
        l1.push(if sweep.l1_n > 0 {
            let grid = Grid2D::new(sweep.l1_n, l1_box(&g, sweep.delta, t)?)?;
            Some(kernel_l1_norm(&g, sweep.delta, t, &grid)?)
        } else {
            None
        });
    }

    let mut violations = Vec::new();
    for &s in &sweep.s {
        let mut hs = Vec::with_capacity(ts.len());
        for &k in &sweep.k {
            let mut ratios = Vec::with_capacity(ts.len());
            for (i, &t) in ts.iter().enumerate() {
                let moment = kernel_moment(&g, s, k, t)?.value;
                let h = kernel_hs_norm(&g, s, t)?;
                let envelope = moment_envelope(&g, s, k, t)?;
                let ratio = moment / envelope;
                if !(ratio.is_finite() && ratio > 0.0) {
                    violations.push(format!("s = {s}, k = {k}, t = {t}: ratio {ratio}"));
                }
                ratios.push(ratio);
                if hs.len() < ts.len() {
                    hs.push(h);
                }
                let l1_col = l1[i].map(num).unwrap_or_default();
                out.write_record([
                    num(t),
                    num(s),
                    num(k),
                    num(moment),
                    num(h),
                    l1_col,
                    num(envelope),
                    num(ratio),
                    num(g_at[i]),
                ])?;
            }
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| {
                (lo.min(r), hi.max(r))
            });
            eprintln!("s = {s}, k = {k}: moment/envelope in [{lo:.4e}, {hi:.4e}]");
        }
        if hs.len() == ts.len() {
            let corr: Vec<f64> = g_at.iter().map(|v| v.powf(0.5 * (s + 1.0))).collect();
            let fit = fit_scaling(&ts, &hs, Some(&corr))?;
            let target = -0.5 * (s + 1.0);
            eprintln!(
                "s = {s}: corrected hs_norm exponent {:.4} (expected {target})",
                fit.fitted_exponent
            );
            if (fit.fitted_exponent - target).abs() > sweep.tolerance {
                violations.push(format!(
                    "s = {s}: hs_norm exponent {:.4} deviates from {target} by more than {}",
                    fit.fitted_exponent, sweep.tolerance
                ));
            }
        }
    }
    if let Some(values) = l1.iter().copied().collect::<Option<Vec<f64>>>() {
        let p = 1.0 - 0.5 * sweep.delta;
        let corr: Vec<f64> = g_at.iter().map(|v| v.powf(p)).collect();
        let fit = fit_scaling(&ts, &values, Some(&corr))?;
        eprintln!(
            "l1_norm: corrected exponent {:.4} (expected {})",
            fit.fitted_exponent, -p
        );
        if (fit.fitted_exponent + p).abs() > sweep.tolerance {
            violations.push(format!(
                "l1_norm exponent {:.4} deviates from {} by more than {}",
                fit.fitted_exponent, -p, sweep.tolerance
            ));
        }
    }
    out.flush()?;
    verdict(violations)
}

pub fn verify_besov(config: &Path, output: Option<&Path>) -> Outcome {
    let cfg = load(config)?;
    let sweep = &cfg.besov;
    let mut out = csv_writer(output)?;
    out.write_record([
        "kind", "n", "j", "k", "a", "b", "alpha", "q", "fields", "lower", "upper", "min_lhs",
    ])?;
    let mut violations = Vec::new();

    let n = sweep.grids.iter().copied().max().unwrap_or(cfg.n);
    let grid = Grid2D::torus(n)?;
    let inf = f64::INFINITY;
    for j in (1..).take_while(|&j| grid.keeps_mode(1 << j)) {
        let lam = f64::from(1u32 << j);
        let f = SpectralField2D::from_fn(&grid, |x, _| (lam * x).sin());
        for k in 0..=2 {
            for (a, b) in [(1.0, 1.0), (2.0, 2.0), (2.0, inf), (inf, inf)] {
                let r = bernstein_check(lam, k, a, b, &f)?;
                let ok = r.upper.is_finite() && r.upper > 0.0 && (r.lower - 1.0).abs() < 1e-9;
                if !ok {
                    violations.push(format!(
                        "Bernstein j = {j}, k = {k}, a = {a}, b = {b}: {r:?}"
                    ));
                }
                out.write_record([
                    "bernstein".into(),
                    n.to_string(),
                    j.to_string(),
                    k.to_string(),
                    num(a),
                    num(b),
                    String::new(),
                    String::new(),
                    String::new(),
                    num(r.lower),
                    num(r.upper),
                    String::new(),
                ])?;
            }
        }
    }

    let mut surveys = Vec::new();
    for &n in &sweep.grids {
        let rows = lower_bound_survey(n, sweep.fields, cfg.seed, sweep.kmax, &sweep.pairs)?;
        for s in &rows {
            if !(s.min_lhs > 0.0 && s.min_ratio > 0.0) {
                violations.push(format!(
                    "lower bound n = {n}, alpha = {}, q = {}: min lhs {}, min ratio {}",
                    s.alpha, s.q, s.min_lhs, s.min_ratio
                ));
            }
            out.write_record([
                "lower_bound".into(),
                n.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                num(s.alpha),
                num(s.q),
                s.fields.to_string(),
                num(s.min_ratio),
                num(s.max_ratio),
                num(s.min_lhs),
            ])?;
        }
        surveys.push(rows);
    }
    for (i, &(alpha, q)) in sweep.pairs.iter().enumerate() {
        let c: Vec<f64> = surveys.iter().map(|rows| rows[i].min_ratio).collect();
        let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let spread = hi / lo - 1.0;
        eprintln!("alpha = {alpha}, q = {q}: lower-bound constant across grids {c:?}, spread {spread:.3e}");
        if !(spread <= sweep.tolerance) {
            violations.push(format!(
                "alpha = {alpha}, q = {q}: constant spread {spread:.3e} exceeds {}",
                sweep.tolerance
            ));
        }
    }
    out.flush()?;
    verdict(violations)
}

/// Coefficient sets for `verify-gronwall`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// `n = 1`, all else zero; the envelope has a closed form.
    Canonical,
    /// `l = 1`, all else zero.
    Linear,
    /// `l = m = n = f = 1`.
    Full,
}

pub struct GronwallOverrides {
    pub k: Option<u32>,
    pub alpha0: Option<f64>,
    pub t_end: Option<f64>,
    pub preset: Option<Preset>,
}

fn read_series(path: &Path) -> Result<Vec<DiagRecord>, Failure> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let columns = DiagRecord::FIELDS
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Failure::Usage(format!("{}: missing column {name}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut series = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let values = columns
            .iter()
            .map(|&c| row[c].parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        series.push(DiagRecord::from_values(&values).expect("one value per field"));
    }
    Ok(series)
}

pub fn verify_gronwall(config: &Path, output: Option<&Path>, over: GronwallOverrides) -> Outcome {
    let cfg = load(config)?;
    let sweep = &cfg.gronwall;
    let k = over.k.unwrap_or(sweep.k);
    let mut p = GronwallProblem::new(k, over.t_end.unwrap_or(cfg.t_end))?;
    p.alpha0 = over.alpha0.unwrap_or(sweep.alpha0).max(p.alpha0);
    let (l, m, n, f) = match over.preset {
        Some(Preset::Canonical) => (0.0, 0.0, 1.0, 0.0),
        Some(Preset::Linear) => (1.0, 0.0, 0.0, 0.0),
        Some(Preset::Full) => (1.0, 1.0, 1.0, 1.0),
        None => (sweep.l, sweep.m, sweep.n, sweep.f),
    };
    p.l = Coefficient::Constant(l);
    p.m = Coefficient::Constant(m);
    p.n = Coefficient::Constant(n);
    p.f = Coefficient::Constant(f);
    let opts = EnvelopeOptions {
        samples: sweep.samples,
        ..EnvelopeOptions::default()
    };
    let traj = integrate_envelope(&p, sweep.a0, opts)?;

    let mut out = csv_writer(output)?;
    out.write_record(["t", "coordinate", "depth", "log_y"])?;
    for (i, &t) in traj.times.iter().enumerate() {
        out.write_record([
            num(t),
            num(traj.coordinate[i]),
            traj.depth.to_string(),
            num(traj.log_y[i]),
        ])?;
    }
    out.flush()?;

    let mut violations = Vec::new();
    if traj.coordinate.iter().any(|z| !z.is_finite()) {
        violations.push("envelope coordinate is not finite on [0, T]".into());
    }
    if traj.coordinate.windows(2).any(|w| w[1] < w[0]) {
        violations.push("envelope coordinate decreases".into());
    }
    if l == 0.0 && m == 0.0 && f == 0.0 {
        let z0 = traj.coordinate[0];
        let err = traj
            .times
            .iter()
            .zip(&traj.coordinate)
            .map(|(t, z)| (z - z0 - n * t).abs())
            .fold(0.0, f64::max);
        eprintln!("closed-form deviation {err:.2e}");
        if err > 1e-6 {
            violations.push(format!("closed-form deviation {err:.2e} exceeds 1e-6"));
        }
    }
    eprintln!(
        "depth {} coordinate {} -> {} over [0, {}] in {} steps",
        traj.depth,
        traj.coordinate[0],
        traj.coordinate.last().unwrap(),
        p.t_end,
        traj.steps
    );

    if let Some(path) = &sweep.series {
        let series = read_series(path)?;
        let report = check_estimate_usage(&series, sweep.sigma, k)?;
        eprintln!(
            "usage check on {} samples: C_growth {:.4e}, C_inequality {:.4e}, flags {:?} / {:?}",
            report.samples,
            report.c_growth,
            report.c_inequality,
            report.growth_flags,
            report.inequality_flags
        );
        if !report.passed() {
            violations.push(format!(
                "usage check: C_growth {}, C_inequality {}, growth flags {:?}, inequality flags {:?}",
                report.c_growth, report.c_inequality, report.growth_flags, report.inequality_flags
            ));
        }
    }
    verdict(violations)
}

pub fn fit(
    input: &Path,
    time: &str,
    col: &str,
    correction: Option<&str>,
    power: f64,
    filters: &[(String, f64)],
) -> Outcome {
    let mut rdr = csv::Reader::from_path(input)?;
    let headers = rdr.headers()?.clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::Usage(format!("{}: no column named {name}", input.display())))
    };
    let (ti, vi) = (index(time)?, index(col)?);
    let ci = correction.map(index).transpose()?;
    let fi = filters
        .iter()
        .map(|(c, v)| Ok((index(c)?, *v)))
        .collect::<Result<Vec<_>, Failure>>()?;

    let parse = |row: &csv::StringRecord, i: usize| {
        row[i].parse::<f64>().map_err(|_| {
            Failure::Usage(format!(
                "{}: cannot parse {:?} in column {}",
                input.display(),
                &row[i],
                &headers[i]
            ))
        })
    };
    let (mut ts, mut vs, mut cs) = (Vec::new(), Vec::new(), Vec::new());
    for row in rdr.records() {
        let row = row?;
        let mut keep = true;
        for &(i, v) in &fi {
            keep &= parse(&row, i)? == v;
        }
        if !keep {
            continue;
        }
        ts.push(parse(&row, ti)?);
        vs.push(parse(&row, vi)?);
        if let Some(i) = ci {
            cs.push(parse(&row, i)?.powf(power));
        }
    }
    let fit = fit_scaling(&ts, &vs, ci.map(|_| cs.as_slice()))?;
    println!("samples {}", ts.len());
    println!("exponent {}", fit.fitted_exponent);
    println!("residual {}", fit.residual);
    Ok(())
}
