//! Output writers. Data files are the source of truth; the SVG is a
//! convenience render. Schemas are documented in docs/output-schemas.md and
//! kept byte-stable: same config, same bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use banditlab::checkers::Certificate;
use banditlab::{expost_regret, Trajectory, UtilityReport};
use serde::Serialize;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}

/// Per-round CSV: `t,agent,arm,reward,cum_regret` (cumulative pseudo-regret
/// against the best original arm).
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mu_star = traj.instance().benchmark_mean();
    let mut out = String::from("t,agent,arm,reward,cum_regret\n");
    let mut cum = 0.0;
    for r in traj.rounds() {
        cum += mu_star - traj.instance().mean(r.arm);
        out.push_str(&format!("{},{},{},{},{}\n", r.t, r.agent, r.arm, r.reward, cum));
    }
    out
}

pub fn write_trajectory_csv(dir: &Path, name: &str, traj: &Trajectory) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.csv"));
    write_atomically(&path, trajectory_csv(traj).as_bytes())?;
    Ok(path)
}

/// Rounds as JSON, for `--format json`.
pub fn write_trajectory_json(dir: &Path, name: &str, traj: &Trajectory) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.json"));
    let bytes = serde_json::to_vec_pretty(traj.rounds())?;
    write_atomically(&path, &bytes)?;
    Ok(path)
}

#[derive(Serialize)]
pub struct RunSummary<'a> {
    pub schema: &'static str,
    pub policy: &'a banditlab::PolicySpec,
    pub horizon: u64,
    pub alpha: f64,
    pub master_seed: u64,
    pub deterministic_trace: bool,
    pub regret: f64,
    pub total_reward: f64,
    pub utilities: &'a [f64],
}

pub fn write_run_summary(
    dir: &Path,
    traj: &Trajectory,
    policy: &banditlab::PolicySpec,
    utilities: &UtilityReport,
    master_seed: u64,
    deterministic_trace: bool,
) -> Result<PathBuf> {
    let summary = RunSummary {
        schema: "banditlab.run-summary.v1",
        policy,
        horizon: traj.horizon(),
        alpha: utilities.alpha,
        master_seed,
        deterministic_trace,
        regret: expost_regret(traj),
        total_reward: utilities.total_reward,
        utilities: &utilities.per_agent,
    };
    let path = dir.join("summary.json");
    write_atomically(&path, &serde_json::to_vec_pretty(&summary)?)?;
    Ok(path)
}

pub fn write_certificate(dir: &Path, name: &str, cert: &Certificate) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.json"));
    write_atomically(&path, &serde_json::to_vec_pretty(cert)?)?;
    Ok(path)
}

pub fn read_certificate(path: &Path) -> Result<Certificate> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Long-format sweep CSV: `policy,horizon,regret_mean,ci_half_width_95,reps`.
pub struct SweepRow {
    pub policy: String,
    pub horizon: u64,
    pub regret_mean: f64,
    pub ci_half_width: f64,
    pub reps: u64,
}

pub fn write_sweep_csv(dir: &Path, rows: &[SweepRow]) -> Result<PathBuf> {
    let mut out = String::from("policy,horizon,regret_mean,ci_half_width_95,reps\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.policy, r.horizon, r.regret_mean, r.ci_half_width, r.reps
        ));
    }
    let path = dir.join("sweep.csv");
    write_atomically(&path, out.as_bytes())?;
    Ok(path)
}

/// Single log-log polyline per policy; axes annotated with the grid values.
pub fn write_sweep_svg(dir: &Path, rows: &[SweepRow]) -> Result<PathBuf> {
    let (w, h, margin) = (640.0, 420.0, 60.0);
    let xs: Vec<f64> = rows.iter().map(|r| (r.horizon as f64).log10()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.regret_mean.max(1e-9).log10())
        .collect();
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let sx = |x: f64| margin + (x - x_min) / (x_max - x_min).max(1e-9) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - (y - y_min) / (y_max - y_min).max(1e-9) * (h - 2.0 * margin);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = margin,
        b = h - margin,
        r = w - margin,
        t = margin
    ));
    // one polyline per policy, in first-seen order
    let mut seen: Vec<&str> = Vec::new();
    for row in rows {
        if !seen.contains(&row.policy.as_str()) {
            seen.push(&row.policy);
        }
    }
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (idx, policy) in seen.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .zip(xs.iter().zip(&ys))
            .filter(|(r, _)| r.policy == *policy)
            .map(|(_, (&x, &y))| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
            palette[idx % palette.len()],
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">{}</text>\n",
            w - margin + 4.0,
            margin + 14.0 * idx as f64,
            palette[idx % palette.len()],
            policy
        ));
    }
    for (row, &x) in rows.iter().zip(&xs) {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            sx(x),
            h - margin + 16.0,
            row.horizon
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"11\">log regret vs log horizon</text>\n",
        margin,
        margin - 10.0
    ));
    svg.push_str("</svg>\n");
    let path = dir.join("sweep.svg");
    write_atomically(&path, svg.as_bytes())?;
    Ok(path)
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (max - min).abs() < 1e-12 {
        (min - 0.5, max + 0.5)
    } else {
        (min, max)
    }
}

/// Run-length schedule file: `i,s_i`.
pub fn write_schedule_csv(dir: &Path, entries: &[u64]) -> Result<PathBuf> {
    let mut out = String::from("i,s_i\n");
    for (i, s) in entries.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, s));
    }
    let path = dir.join("schedule.csv");
    write_atomically(&path, out.as_bytes())?;
    Ok(path)
}
