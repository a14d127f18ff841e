use crate::error::{invalid, Error, Result};

use super::{DiagConfig, DiagRecord, Diagnostics, DtPolicy, SimState, Solver};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    Fixed(f64),
    /// Advective CFL controller capped at `dt_max`.
    Cfl {
        cfl: f64,
        dt_max: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunControl {
    pub t_end: f64,
    pub step: StepControl,
    /// Emit a diagnostic row every this many steps; `0` emits only the first and last.
    pub diag_every: u64,
    /// Checkpoint every this many steps; `0` disables checkpoints.
    pub checkpoint_every: u64,
    pub diag: DiagConfig,
}

impl RunControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!(
                "t_end must be finite and nonnegative, got {}",
                self.t_end
            )));
        }
        match self.step {
            StepControl::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(invalid(format!("dt must be positive, got {dt}")));
            }
            StepControl::Cfl { cfl, dt_max } if !(cfl > 0.0) || !(dt_max > 0.0) => {
                return Err(invalid("cfl and dt_max must be positive"));
            }
            _ => {}
        }
        self.diag.validate()
    }
}

/// Receives diagnostic rows and checkpoints while a run is in progress.
pub trait Observer {
    fn record(&mut self, _record: &DiagRecord) -> Result<()> {
        Ok(())
    }

    fn checkpoint(&mut self, _state: &SimState) -> Result<()> {
        Ok(())
    }
}

pub struct NoopObserver;

impl Observer for NoopObserver {}

/// Advances `initial` to `control.t_end`, returning the final state and every
/// emitted row. Rows are emitted at `t = 0`, every `diag_every` steps and at
/// the final time. The last step is shortened to land on `t_end` exactly.
pub fn simulate(
    solver: &Solver,
    initial: SimState,
    control: &RunControl,
    observer: &mut dyn Observer,
) -> Result<(SimState, Vec<DiagRecord>)> {
    control.validate()?;
    if initial.grid() != solver.grid() {
        return Err(Error::GridMismatch);
    }
    let mut diag = Diagnostics::new(control.diag);
    let mut state = initial;
    let mut records = Vec::new();
    let first = diag.record(solver, &state, 0.0);
    observer.record(&first)?;
    records.push(first);

    let t_end = control.t_end;
    let stop_tol = 1e-12 * t_end.max(1.0);
    loop {
        let remaining = t_end - state.t;
        if remaining <= stop_tol {
            break;
        }
        let policy = match control.step {
            StepControl::Fixed(dt) => {
                // Absorb a sliver left by roundoff into the last step.
                let dt = if remaining - dt < 1e-9 * dt {
                    remaining
                } else {
                    dt
                };
                DtPolicy::Fixed(dt)
            }
            StepControl::Cfl { cfl, dt_max } => DtPolicy::Cfl {
                cfl,
                dt_max,
                remaining,
            },
        };
        let out = solver.advance(&state, policy)?;
        diag.accumulate(&out.increments);
        state = out.state;
        let done = t_end - state.t <= stop_tol;
        if done {
            state.t = t_end;
        }
        if control.diag_every > 0 && state.step_count.is_multiple_of(control.diag_every) || done {
            let rec = diag.record(solver, &state, out.dt);
            observer.record(&rec)?;
            records.push(rec);
        }
        if control.checkpoint_every > 0 && state.step_count.is_multiple_of(control.checkpoint_every)
        {
            observer.checkpoint(&state)?;
        }
    }
    Ok((state, records))
}
