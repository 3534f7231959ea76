//! Transience classification of the canonical two-point model against the
//! majority sign of simulated walks.

use rayon::prelude::*;
use rwre_core::annealed::{self, Transience};
use rwre_core::simulate::WalkPlan;
use rwre_core::EnvironmentLaw;

use super::{run_plain, sub_seed};
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{ColumnKind, Plot, PlotBody, Raster, ResultTable};
use crate::{Report, RunContext};

const GRID: usize = 41;

pub fn preset() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("phase-diagram");
    cfg.budget = Budget { environments: Some(200), walks: Some(1), steps: Some(100_000), ..Budget::default() };
    cfg
}

/// Grid values on which the law degenerates (0, 1) or sits on a line `eta = 0` (1/2).
fn on_boundary(v: f64) -> bool {
    v == 0.0 || v == 0.5 || v == 1.0
}

const REGIONS: [(&str, &str); 7] = [
    ("eta<0 v>0", "#2166ac"),
    ("eta<0 v=0", "#92c5de"),
    ("eta>0 v=0", "#f4a582"),
    ("eta>0 v<0", "#b2182b"),
    ("eta=0", "#f7f7f7"),
    ("not simulated", "#bababa"),
    ("mismatch", "#000000"),
];

fn region(law: &EnvironmentLaw) -> Result<usize> {
    let class = annealed::classify(law)?;
    Ok(match class.class {
        Transience::TransientPlus if annealed::mean_rho(law)? < 1.0 => 0,
        Transience::TransientPlus => 1,
        Transience::TransientMinus if annealed::mean_inv_rho(law)? < 1.0 => 3,
        Transience::TransientMinus => 2,
        Transience::Recurrent => 4,
    })
}

struct Point {
    alpha: f64,
    beta: f64,
    eta: f64,
    region: usize,
    frac_pos: f64,
    frac_neg: f64,
    /// Majority margin in standard errors, signed so that positive agrees with the prediction.
    margin: f64,
    agree: bool,
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let n_env = cfg.environments(200);
    let n_walks = cfg.walks(1);
    let steps = cfg.steps(100_000);
    let axis: Vec<f64> = (0..GRID).map(|i| i as f64 / (GRID - 1) as f64).collect();
    let interior: Vec<(usize, f64, f64)> = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| !on_boundary(a) && !on_boundary(b))
        .enumerate()
        .map(|(k, (a, b))| (k, a, b))
        .collect();

    let points: Vec<Point> = interior
        .par_iter()
        .map(|&(k, alpha, beta)| {
            let law = EnvironmentLaw::TwoPointSites { alpha, beta };
            let eta = annealed::eta(&law)?;
            let region = region(&law)?;
            let ens = run_plain(&law, n_env, n_walks, WalkPlan::new(steps), sub_seed(cfg.seed, k as u64))?;
            let last = ens.stats.last().expect("final position is always recorded");
            let m = (n_env * n_walks) as f64;
            let (fp, fm) = (last.frac_positive, last.frac_negative);
            let d = fp - fm;
            let se = ((fp + fm - d * d) / m).sqrt();
            let sign = if eta < 0.0 { 1.0 } else { -1.0 };
            let margin = if se > 0.0 { sign * d / se } else { sign * d.signum() * f64::INFINITY };
            let agree = if eta < 0.0 { fp > fm } else { fm > fp };
            Ok(Point { alpha, beta, eta, region, frac_pos: fp, frac_neg: fm, margin, agree })
        })
        .collect::<Result<_>>()?;

    let mut table = ResultTable::new(
        "phase_points",
        &[
            ("alpha", ColumnKind::Float),
            ("beta", ColumnKind::Float),
            ("eta", ColumnKind::Float),
            ("region", ColumnKind::Text),
            ("frac_positive", ColumnKind::Float),
            ("frac_negative", ColumnKind::Float),
            ("margin_se", ColumnKind::Float),
            ("agree", ColumnKind::Bool),
        ],
    );
    for p in &points {
        table.push(vec![
            p.alpha.into(),
            p.beta.into(),
            p.eta.into(),
            REGIONS[p.region].0.into(),
            p.frac_pos.into(),
            p.frac_neg.into(),
            p.margin.into(),
            p.agree.into(),
        ])?;
    }
    report.table(table);

    let mut cells = Vec::with_capacity(GRID * GRID);
    let mut next = points.iter().peekable();
    for &a in &axis {
        for &b in &axis {
            let cat = match next.peek() {
                Some(p) if p.alpha == a && p.beta == b => {
                    let p = next.next().expect("peeked");
                    if p.agree {
                        p.region
                    } else {
                        6
                    }
                }
                _ if a == 0.5 || b == 0.5 => 4,
                _ => 5,
            };
            cells.push((a, b, cat));
        }
    }
    report.plot(Plot {
        name: "phase_diagram".into(),
        title: "Transience regions of the two-point model".into(),
        x_label: "alpha".into(),
        y_label: "beta".into(),
        log_x: false,
        log_y: false,
        body: PlotBody::Raster(Raster { categories: REGIONS.iter().map(|(n, c)| (n.to_string(), *c)).collect(), cells }),
    });

    let mismatches = points.iter().filter(|p| !p.agree).count();
    let worst = points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
    report.metric("points", points.len() as f64);
    report.metric("smallest_margin_se", worst);
    for (i, key) in ["right_ballistic", "right_zero_speed", "left_zero_speed", "left_ballistic"].iter().enumerate() {
        report.metric(&format!("points.{key}"), points.iter().filter(|p| p.region == i).count() as f64);
    }
    let allowed = cfg.tolerance("phase.mismatches", 0.0);
    report.check("mismatched_points", mismatches as f64, format!("<= {allowed}"), mismatches as f64 <= allowed);
    Ok(())
}
