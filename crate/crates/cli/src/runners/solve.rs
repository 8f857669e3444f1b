//! Plain solver runs: kinetic, drift-diffusion, and both side by side.

use rashba_core::grid::{Grid, SpinDensityField, WignerField};
use rashba_core::kinetic::{run_kinetic, KineticInitial, KineticStepper, ModelParams};
use rashba_core::qdd::{run_qdd, QddParams, QddStepper};

use super::precondition;
use crate::output::{num, Csv, Output};
use crate::registry::{RunError, Runner, Status};
use crate::scenario::Scenario;

/// Snapshot times: multiples of `interval` below `t_end`, then `t_end`.
pub fn output_times(t_end: f64, interval: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut k = 1;
    while (k as f64) * interval < t_end * (1.0 - 1e-12) {
        times.push(k as f64 * interval);
        k += 1;
    }
    times.push(t_end);
    times
}

struct Setup {
    grid: Grid,
    initial: SpinDensityField,
    kinetic: ModelParams,
    qdd: QddParams,
    kinetic_dt: f64,
    qdd_dt: f64,
}

impl Setup {
    fn new(s: &Scenario, kinetic: bool, qdd: bool) -> Result<Self, RunError> {
        let grid = precondition(s.build_grid())?;
        let v = precondition(s.build_potential(&grid))?;
        let initial = precondition(s.build_initial(&grid))?;
        let p = &s.params;
        let kp = precondition(ModelParams::new(p.epsilon, p.alpha, p.tau, v.clone()))?;
        let qp = precondition(QddParams::new(p.alpha, p.kappa, v))?;
        let kinetic_dt = s.grid.dt;
        let qdd_dt = p.qdd_dt.unwrap_or(s.grid.dt);
        if kinetic {
            precondition(KineticStepper::new(&grid, &kp, kinetic_dt))?;
        }
        if qdd {
            precondition(QddStepper::new(&grid, &qp, qdd_dt))?;
        }
        Ok(Self { grid, initial, kinetic: kp, qdd: qp, kinetic_dt, qdd_dt })
    }
}

const KINETIC_HEADER: &str = "step,t,mass,spin_1,spin_2,spin_3,max_spin_ratio";
const QDD_HEADER: &str = "step,t,total_charge,spin_1,spin_2,spin_3,spin_norm,max_spin_ratio";

/// A kinetic solution advanced one output interval at a time.
struct KineticTrack<'a> {
    setup: &'a Setup,
    w: Option<WignerField>,
    t: f64,
    step: usize,
    diag: Csv,
}

impl<'a> KineticTrack<'a> {
    fn new(setup: &'a Setup, diag: Csv) -> Result<Self, RunError> {
        let w = rashba_core::kinetic::equilibrium_semiclassical(&setup.grid, &setup.initial)?;
        Ok(Self { setup, w: Some(w), t: 0.0, step: 0, diag })
    }

    fn advance(&mut self, t_next: f64) -> Result<SpinDensityField, RunError> {
        let s = self.setup;
        let w = self.w.take().expect("state present between segments");
        let (t0, step0) = (self.t, self.step);
        let mut io = Ok(());
        let diag = &mut self.diag;
        let mut observer = |d: &rashba_core::kinetic::KineticDiagnostics| {
            if d.step == 0 && step0 > 0 {
                return;
            }
            let row = [
                (step0 + d.step).to_string(),
                num(t0 + d.t),
                num(d.mass),
                num(d.total_spin[0]),
                num(d.total_spin[1]),
                num(d.total_spin[2]),
                num(d.max_spin_ratio),
            ];
            if io.is_ok() {
                io = diag.row(&row);
            }
        };
        let run = run_kinetic(&s.grid, KineticInitial::Wigner(w), &s.kinetic, t_next - t0, s.kinetic_dt, usize::MAX, &mut observer);
        self.diag.flush()?;
        io?;
        let mut run = run?;
        self.step = step0 + run.final_state.step;
        self.t = t_next;
        let (_, n) = run.snapshots.pop().expect("final density recorded");
        self.w = Some(run.final_state.w);
        Ok(n)
    }
}

struct QddTrack<'a> {
    setup: &'a Setup,
    n: SpinDensityField,
    t: f64,
    step: usize,
    diag: Csv,
}

impl<'a> QddTrack<'a> {
    fn new(setup: &'a Setup, diag: Csv) -> Self {
        Self { setup, n: setup.initial.clone(), t: 0.0, step: 0, diag }
    }

    fn advance(&mut self, t_next: f64) -> Result<SpinDensityField, RunError> {
        let s = self.setup;
        let (t0, step0) = (self.t, self.step);
        let mut io = Ok(());
        let diag = &mut self.diag;
        let mut observer = |d: &rashba_core::qdd::QddDiagnostics| {
            if d.step == 0 && step0 > 0 {
                return;
            }
            let row = [
                (step0 + d.step).to_string(),
                num(t0 + d.t),
                num(d.total_charge),
                num(d.total_spin[0]),
                num(d.total_spin[1]),
                num(d.total_spin[2]),
                num(d.spin_norm),
                num(d.max_spin_ratio),
            ];
            if io.is_ok() {
                io = diag.row(&row);
            }
        };
        let run = run_qdd(&s.grid, self.n.clone(), &s.qdd, t_next - t0, s.qdd_dt, usize::MAX, &mut observer);
        self.diag.flush()?;
        io?;
        let run = run?;
        self.step = step0 + run.final_state.step;
        self.t = t_next;
        self.n = run.final_state.n;
        Ok(self.n.clone())
    }
}

fn snapshot_row(index: usize, t: f64, file: &str, n: &SpinDensityField, grid: &Grid, reference: Option<f64>) -> Vec<String> {
    let mut row = vec![index.to_string(), num(t), file.to_string(), num(n.total_charge(grid))];
    if let Some(e) = reference {
        row.push(num(e));
    }
    row
}

pub struct KineticRunner;

impl Runner for KineticRunner {
    fn name(&self) -> &'static str {
        "kinetic"
    }

    fn about(&self) -> &'static str {
        "Wigner-BGK kinetic solver from the semiclassical equilibrium of the initial density"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let setup = Setup::new(s, true, false)?;
        let g = &setup.grid;
        let mut track = KineticTrack::new(&setup, out.csv("diagnostics.csv", KINETIC_HEADER)?)?;
        let mut index = out.csv("snapshots.csv", "index,t,file,total_charge")?;
        let file = out.density_snapshot("density_0000", &setup.initial, *g.spec(), 0.0)?;
        index.row(&snapshot_row(0, 0.0, &file, &setup.initial, g, None))?;
        let result = out.time("solve", |out| -> Result<(), RunError> {
            for (i, t) in output_times(s.output.t_end, s.output.interval).into_iter().enumerate() {
                let n = track.advance(t)?;
                let file = out.density_snapshot(&format!("density_{:04}", i + 1), &n, *g.spec(), t)?;
                index.row(&snapshot_row(i + 1, t, &file, &n, g, None))?;
                index.flush()?;
            }
            Ok(())
        });
        index.flush()?;
        result?;
        out.note(format!("kinetic run to t = {} in {} steps", s.output.t_end, track.step));
        Ok(Status::Passed)
    }
}

pub struct QddRunner;

impl Runner for QddRunner {
    fn name(&self) -> &'static str {
        "qdd"
    }

    fn about(&self) -> &'static str {
        "spin drift-diffusion solver (RK4); reports the heat-kernel error for flat-potential Gaussian bumps"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let setup = Setup::new(s, false, true)?;
        let g = &setup.grid;
        let has_reference = s.heat_reference(g, 0.0).is_some();
        let reference_error = |n: &SpinDensityField, t: f64| {
            s.heat_reference(g, t).map(|exact| g.l2_norm(&(n.charge() - &exact)) / g.l2_norm(&exact))
        };
        let header = if has_reference { "index,t,file,total_charge,l2_error" } else { "index,t,file,total_charge" };
        let mut track = QddTrack::new(&setup, out.csv("diagnostics.csv", QDD_HEADER)?);
        let mut index = out.csv("snapshots.csv", header)?;
        let file = out.density_snapshot("density_0000", &setup.initial, *g.spec(), 0.0)?;
        index.row(&snapshot_row(0, 0.0, &file, &setup.initial, g, reference_error(&setup.initial, 0.0)))?;
        let mut last_error = None;
        let result = out.time("solve", |out| -> Result<(), RunError> {
            for (i, t) in output_times(s.output.t_end, s.output.interval).into_iter().enumerate() {
                let n = track.advance(t)?;
                let file = out.density_snapshot(&format!("density_{:04}", i + 1), &n, *g.spec(), t)?;
                last_error = reference_error(&n, t);
                index.row(&snapshot_row(i + 1, t, &file, &n, g, last_error))?;
                index.flush()?;
            }
            Ok(())
        });
        index.flush()?;
        result?;
        out.note(format!("drift-diffusion run to t = {} in {} steps", s.output.t_end, track.step));
        if let Some(e) = last_error {
            out.note(format!("heat-kernel relative L2 error at t = {}: {e:.3e}", s.output.t_end));
        }
        Ok(Status::Passed)
    }
}

pub struct BothRunner;

impl Runner for BothRunner {
    fn name(&self) -> &'static str {
        "both"
    }

    fn about(&self) -> &'static str {
        "kinetic and drift-diffusion runs on a shared snapshot time axis, with paired density tables"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let setup = Setup::new(s, true, true)?;
        let g = &setup.grid;
        let mut kin = KineticTrack::new(&setup, out.csv("kinetic_diagnostics.csv", KINETIC_HEADER)?)?;
        let mut qdd = QddTrack::new(&setup, out.csv("qdd_diagnostics.csv", QDD_HEADER)?);
        let mut summary = out.csv("diagnostics.csv", "t,kinetic_mass,qdd_mass,relative_l2_discrepancy")?;
        let mut paired = out.csv(
            "paired_density.csv",
            "t,x1,x2,kinetic_n0,kinetic_n1,kinetic_n2,kinetic_n3,qdd_n0,qdd_n1,qdd_n2,qdd_n3",
        )?;
        let mut write = |out: &mut Output, i: usize, t: f64, k: &SpinDensityField, q: &SpinDensityField| -> Result<(), RunError> {
            out.density_snapshot(&format!("kinetic_{i:04}"), k, *g.spec(), t)?;
            out.density_snapshot(&format!("qdd_{i:04}"), q, *g.spec(), t)?;
            let d = k.l2_distance(q, g) / q.l2_norm(g);
            summary.row(&[num(t), num(k.total_charge(g)), num(q.total_charge(g)), num(d)])?;
            let (x1, x2) = (g.x1(), g.x2());
            for ((a, b), _) in k.charge().indexed_iter() {
                let mut row = vec![num(t), num(x1[a]), num(x2[b])];
                row.extend(k.comps().iter().chain(q.comps()).map(|c| num(c[[a, b]])));
                paired.row(&row)?;
            }
            summary.flush()?;
            paired.flush()?;
            Ok(())
        };
        write(out, 0, 0.0, &setup.initial, &setup.initial)?;
        out.time("solve", |out| -> Result<(), RunError> {
            for (i, t) in output_times(s.output.t_end, s.output.interval).into_iter().enumerate() {
                let k = kin.advance(t)?;
                let q = qdd.advance(t)?;
                write(out, i + 1, t, &k, &q)?;
            }
            Ok(())
        })?;
        out.note(format!(
            "kinetic ({} steps) and drift-diffusion ({} steps) runs to t = {}",
            kin.step, qdd.step, s.output.t_end
        ));
        Ok(Status::Passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_times_end_exactly_at_t_end() {
        assert_eq!(output_times(0.3, 0.1).len(), 3);
        assert_eq!(*output_times(0.3, 0.1).last().unwrap(), 0.3);
        assert_eq!(output_times(0.25, 0.1), vec![0.1, 0.2, 0.25]);
        assert_eq!(output_times(0.1, 1.0), vec![0.1]);
    }
}
