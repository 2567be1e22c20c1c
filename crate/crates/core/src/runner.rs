//! Run orchestration: dispatch a validated `RunConfig` to the library,
//! persist snapshots/logs/summaries, and report a process exit code
//! (0 converged/ok, 2 non-converged, 1 error).

use crate::config::{Command, OutputSpec, RunConfig};
use crate::error::{Error, Result};
use crate::functionals::{self, eval_all};
use crate::greens::{self, GreensSpec};
use crate::grid::{self, Field};
use crate::minimize::{self, MinimizeMode, MinimizeResult};
use crate::params::ProblemParams;
use crate::shrink::{self, SweepConfig};
use crate::snapshot;
use crate::soliton::{log_slope_fit, Soliton1D};
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug)]
pub struct ExitReport {
    pub code: i32,
    pub summary: serde_json::Value,
}

/// Execute a run. Deterministic given the seed embedded in the config.
pub fn run(cfg: &RunConfig) -> Result<ExitReport> {
    let out = Outputs::prepare(&cfg.outputs)?;
    let grid_spec = cfg.grid.build()?;
    let mut mcfg = cfg.minimize.clone();
    mcfg.seed = cfg.seed;

    let report = match &cfg.command {
        Command::Soliton1d { omega_min, omega_max, n_omega } => {
            let mut csv = String::from("omega,mass,energy,phi0\n");
            for k in 0..*n_omega {
                let omega = if *n_omega == 1 {
                    *omega_min
                } else {
                    omega_min + (omega_max - omega_min) * k as f64 / (*n_omega - 1) as f64
                };
                let s = Soliton1D::new(omega, cfg.problem.gamma, cfg.problem.p)?;
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    omega,
                    s.mass(),
                    s.energy(),
                    s.eval_profile(0.0)
                ));
            }
            print!("{csv}");
            out.write_text("soliton1d.csv", &csv)?;
            ExitReport { code: 0, summary: json!({ "rows": n_omega }) }
        }

        Command::MinimizeAction => {
            mcfg.mode = MinimizeMode::NehariAction;
            let res = minimize::minimize_action(&mcfg, &cfg.problem, grid_spec)?;
            finish_minimize(&out, &cfg.problem, res)?
        }

        Command::MinimizeEnergy => {
            mcfg.mode = MinimizeMode::MassEnergy;
            let res = minimize::minimize_energy(&mcfg, &cfg.problem, grid_spec)?;
            finish_minimize(&out, &cfg.problem, res)?
        }

        Command::GreensProbe { xi, eta, k_max, even_modes_only } => {
            let mut spec = GreensSpec::from_params(&cfg.problem)?;
            spec.even_modes_only = *even_modes_only;
            spec.k_max = k_max.unwrap_or_else(|| spec.default_k_max());
            let mut csv = String::from("x,y,g\n");
            for i in 0..grid_spec.nx {
                let x = grid_spec.x(i);
                for j in 0..grid_spec.ny {
                    let y = cfg.problem.l_width * grid_spec.y(j);
                    if x == *xi && y == *eta {
                        continue;
                    }
                    csv.push_str(&format!(
                        "{},{},{}\n",
                        x,
                        y,
                        greens::greens_eval(x, y, *xi, *eta, &spec)?
                    ));
                }
            }
            print!("{csv}");
            out.write_text("greens.csv", &csv)?;
            ExitReport {
                code: 0,
                summary: json!({ "k_max": spec.k_max, "tail_bound_at_half": greens::tail_bound(0.5, &spec) }),
            }
        }

        Command::ShrinkSweep { l_list, verify_sentinels } => {
            let scfg = sweep_config(cfg, grid_spec, *verify_sentinels);
            let outcome = shrink::sweep_l(&scfg, l_list)?;
            if let Some(path) = out.path_for("sweep.csv") {
                shrink::write_sweep_csv(&path, &outcome.records)?;
            }
            let all_converged = outcome.records.iter().all(|r| r.converged);
            let summary = json!({
                "e1d_reference": outcome.e1d_reference,
                "omega_1d": outcome.omega_1d,
                "records": outcome.records,
                "sentinels": outcome.sentinels,
            });
            out.write_summary(&summary)?;
            ExitReport { code: if all_converged { 0 } else { 2 }, summary }
        }

        Command::ShrinkLstar { l_list } => {
            let scfg = sweep_config(cfg, grid_spec, false);
            let outcome = shrink::sweep_l(&scfg, l_list)?;
            let probe_cfg = scfg.clone();
            let estimate = shrink::estimate_l_star(&outcome.records, |l| {
                let single = shrink::sweep_l(&probe_cfg, &[l])?;
                Ok(single.records[0].y_independent)
            })?;
            let summary = json!({
                "estimate": estimate,
                "records": outcome.records,
            });
            out.write_summary(&summary)?;
            println!("{summary}");
            ExitReport { code: 0, summary }
        }

        Command::ShrinkLstarstar { mass, optimize } => {
            let b = shrink::l_star_star_bound(*mass, cfg.problem.gamma, cfg.problem.p, *optimize)?;
            let summary = serde_json::to_value(b)?;
            out.write_summary(&summary)?;
            println!("{summary}");
            ExitReport { code: 0, summary }
        }

        Command::ShrinkGammastar => {
            let rep = shrink::gamma_star(
                cfg.problem.omega,
                cfg.problem.l_width,
                grid_spec,
                cfg.problem.p,
                cfg.minimize.tol_grad,
                cfg.minimize.max_iters,
            )?;
            let summary = serde_json::to_value(rep)?;
            out.write_summary(&summary)?;
            println!("{summary}");
            ExitReport { code: 0, summary }
        }

        Command::Verify { snapshot: snap } => {
            let (field, header) = snapshot::read_snapshot(snap)?;
            let params = header.params;
            let rep = eval_all(&field, &params)?;
            let (r1, r2) = functionals::pohozaev_residuals(&field, &params, params.omega)?;
            let green = greens::verify_solution_via_green(&field, &params)?;
            let slope = decay_slope(&field);
            let summary = json!({
                "report": rep,
                "pohozaev": { "r1": r1, "r2": r2 },
                "green_discrepancy": green,
                "decay_slope": slope,
                "recovered_omega": functionals::recover_omega(&field, &params).ok(),
            });
            out.write_summary(&summary)?;
            println!("{summary}");
            ExitReport { code: 0, summary }
        }
    };
    Ok(report)
}

fn sweep_config(cfg: &RunConfig, grid_spec: grid::StripGrid, verify: bool) -> SweepConfig {
    SweepConfig {
        gamma: cfg.problem.gamma,
        p: cfg.problem.p,
        mass: cfg.problem.mass,
        grid: grid_spec,
        tol_grad: cfg.minimize.tol_grad,
        max_iters: cfg.minimize.max_iters,
        seed: cfg.seed,
        y_threshold: 1e-10,
        y_perturbation: cfg.minimize.y_perturbation,
        verify_sentinels: verify,
    }
}

fn finish_minimize(
    out: &Outputs,
    params: &ProblemParams,
    res: MinimizeResult,
) -> Result<ExitReport> {
    if let Some(stem) = out.path_for_stem() {
        snapshot::write_snapshot(&stem, &res.field, params)?;
    }
    if let Some(path) = out.log_path() {
        let mut f = fs::File::create(path)?;
        writeln!(f, "iter,objective,grad_norm,I,M,dy_norm")?;
        for r in &res.log {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                r.iter, r.objective, r.grad_norm, r.nehari, r.mass, r.dy_norm
            )?;
        }
    }
    if let Some(path) = out.field_csv_path() {
        snapshot::write_field_csv(&path, &res.field)?;
    }
    let (r1, r2) = functionals::pohozaev_residuals(&res.field, params, params.omega)?;
    let summary = json!({
        "E": res.report.energy,
        "M": res.report.mass,
        "S": res.report.action,
        "I": res.report.nehari,
        "omega": res.recovered_omega,
        "dy_norm": res.diagnostics.dy_norm,
        "residuals": { "r1": r1, "r2": r2, "grad_norm_tol_met": res.converged },
        "iterations": res.iterations,
        "converged": res.converged,
        "runaway": res.diagnostics.runaway,
        "sym_defect": res.diagnostics.sym_defect,
    });
    out.write_summary(&summary)?;
    println!("{summary}");
    Ok(ExitReport { code: if res.converged { 0 } else { 2 }, summary })
}

/// Least-squares decay slope of the transverse row norm over the right tail.
fn decay_slope(u: &Field) -> Option<f64> {
    let g = u.grid;
    let c = g.center_ix();
    let mut pts = Vec::new();
    for i in c..g.nx {
        let x = g.x(i);
        if x < 2.0 || x > g.x_extent - 2.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..g.ny {
            row += g.wy(j) * u.at(i, j) * u.at(i, j);
        }
        let r = row.sqrt();
        if r > 1e-8 {
            pts.push((x, r));
        }
    }
    if pts.len() < 8 {
        return None;
    }
    Some(log_slope_fit(&pts))
}

struct Outputs {
    dir: Option<PathBuf>,
    spec: OutputSpec,
}

impl Outputs {
    fn prepare(spec: &OutputSpec) -> Result<Outputs> {
        let dir = spec.out_dir.as_ref().map(PathBuf::from);
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
            // fail fast if the directory is not writable
            let probe = d.join(".write_probe");
            fs::write(&probe, b"")?;
            fs::remove_file(&probe)?;
        }
        Ok(Outputs { dir, spec: spec.clone() })
    }

    fn join(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn path_for(&self, default_name: &str) -> Option<PathBuf> {
        self.join(default_name)
    }

    fn path_for_stem(&self) -> Option<PathBuf> {
        let name = self.spec.snapshot.clone().unwrap_or_else(|| "field".into());
        self.join(&name)
    }

    fn log_path(&self) -> Option<PathBuf> {
        let name = self.spec.log.clone().unwrap_or_else(|| "iterations.csv".into());
        self.join(&name)
    }

    fn field_csv_path(&self) -> Option<PathBuf> {
        self.spec.field_csv.as_ref().and_then(|n| self.join(n))
    }

    fn write_summary(&self, summary: &serde_json::Value) -> Result<()> {
        let name = self.spec.summary.clone().unwrap_or_else(|| "summary.json".into());
        if let Some(path) = self.join(&name) {
            fs::write(path, format!("{:#}\n", summary))?;
        }
        Ok(())
    }

    fn write_text(&self, name: &str, text: &str) -> Result<()> {
        if let Some(path) = self.join(name) {
            fs::write(path, text)?;
        }
        Ok(())
    }
}

/// Machine-readable error record for stderr.
pub fn error_record(err: &Error) -> serde_json::Value {
    json!({ "error": { "kind": err.kind(), "message": err.to_string() } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn energy_config(dir: &std::path::Path, seed: u64) -> RunConfig {
        parse_config(&format!(
            r#"{{
  "command": {{ "name": "minimize-energy" }},
  "problem": {{ "p": 2.5, "gamma": -1.0, "omega": 0.66, "l_width": 0.5 }},
  "grid": {{ "x_extent": 16.0, "nx": 193, "ny": 7 }},
  "minimize": {{ "mode": "mass_energy", "max_iters": 40000, "tol_grad": 1e-7, "log_every": 10 }},
  "outputs": {{ "out_dir": "{}" }},
  "seed": {seed}
}}"#,
            dir.display()
        ))
        .unwrap()
    }

    #[test]
    fn energy_run_writes_contract_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = energy_config(dir.path(), 7);
        let report = run(&cfg).unwrap();
        assert_eq!(report.code, 0);
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        for key in ["E", "M", "omega", "dy_norm", "residuals"] {
            assert!(summary.get(key).is_some(), "summary missing {key}");
        }
        assert!(dir.path().join("field.json").exists());
        assert!(dir.path().join("field.bin").exists());
        assert!(dir.path().join("iterations.csv").exists());

        // snapshot round trip reproduces the recorded functionals bit-exactly
        let (field, header) = snapshot::read_snapshot(dir.path().join("field")).unwrap();
        let rep = eval_all(&field, &header.params).unwrap();
        assert_eq!(rep.energy, summary["E"].as_f64().unwrap());
    }

    #[test]
    fn reruns_with_same_seed_are_byte_identical() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run(&energy_config(d1.path(), 99)).unwrap();
        run(&energy_config(d2.path(), 99)).unwrap();
        let a = fs::read(d1.path().join("iterations.csv")).unwrap();
        let b = fs::read(d2.path().join("iterations.csv")).unwrap();
        assert_eq!(a, b);
        let sa = fs::read(d1.path().join("summary.json")).unwrap();
        let sb = fs::read(d2.path().join("summary.json")).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn sweep_run_emits_schema_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&format!(
            r#"{{
  "command": {{ "name": "shrink-sweep", "l_list": [0.25, 0.5] }},
  "problem": {{ "p": 2.5, "gamma": -1.0, "omega": 0.66, "l_width": 1.0 }},
  "grid": {{ "x_extent": 12.0, "nx": 145, "ny": 7 }},
  "minimize": {{ "mode": "mass_energy", "max_iters": 30000, "tol_grad": 1e-7 }},
  "outputs": {{ "out_dir": "{}" }}
}}"#,
            dir.path().display()
        ))
        .unwrap();
        let report = run(&cfg).unwrap();
        assert_eq!(report.code, 0);
        let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "L,energy,dy_norm_scaled,recovered_omega,e1d_gap,h1_gap,y_independent,converged"
        );
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn soliton_table_runs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&format!(
            r#"{{
  "command": {{ "name": "soliton1d", "omega_min": 0.5, "omega_max": 2.0, "n_omega": 4 }},
  "problem": {{ "p": 3.0, "gamma": -1.0, "omega": 1.0, "l_width": 1.0 }},
  "grid": {{ "x_extent": 16.0, "nx": 65, "ny": 5 }},
  "outputs": {{ "out_dir": "{}" }}
}}"#,
            dir.path().display()
        ))
        .unwrap();
        let report = run(&cfg).unwrap();
        assert_eq!(report.code, 0);
        let text = fs::read_to_string(dir.path().join("soliton1d.csv")).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("omega,mass,energy,phi0"));
    }
}
