use std::io::Write;

use anyhow::Result;
use smoothcert::certificates::{first_order_radius, Method, SmoothingParams};
use smoothcert::engine::{certify, certify_exact, CertifyOutcome, SamplingPlan};

use super::collect_points;
use crate::args::CertifyArgs;
use crate::classifier::{self, Built};
use crate::table::{Cell, Format, Table};
use crate::{map_points, with_output, UsageError};

const RESULT_COLUMNS: [&str; 19] = [
    "class",
    "radius",
    "abstained",
    "p_lb",
    "radius_first",
    "successes",
    "trials",
    "selection_counts",
    "v_hat",
    "t",
    "grad_ub",
    "n_pairs",
    "n11",
    "n10",
    "n01",
    "n00",
    "cs_lb",
    "cn_lb",
    "budget",
];

pub fn cmd_certify(args: &CertifyArgs, out: &mut dyn Write) -> Result<()> {
    let points = collect_points(&args.points)?;
    let dim = points[0].len();
    let s = &args.sampling;
    let params = SmoothingParams::new(s.sigma).map_err(|e| UsageError(e.to_string()))?;
    let workers = s.worker_count();
    let built = classifier::build(&args.classifier, dim, workers)?;
    if built.base().dim() != dim {
        return Err(UsageError(format!("classifier has dimension {}, points have {dim}", built.base().dim())).into());
    }
    if args.exact && built.analytic().is_none() {
        return Err(UsageError("--exact needs an analytic classifier (halfspace or slab)".into()).into());
    }

    let echo = classifier::echo(&args.classifier);
    let mut columns: Vec<&str> = vec!["point"];
    columns.extend(echo.iter().map(|(k, _)| *k));
    columns.extend(["x", "sigma", "n0", "n", "eta", "method", "seed", "exact"]);
    columns.extend(RESULT_COLUMNS);
    let mut table = Table::new(columns);

    let results = map_points(points.len(), workers, |i, inner| {
        let x = &points[i];
        if args.exact {
            exact_cells(&built, x, params, args.method)
        } else {
            let plan = SamplingPlan::new(s.n0, s.n, params, s.seed).with_workers(inner);
            let outcome = certify(built.base(), x, &plan, s.eta, args.method)?;
            Ok(outcome_cells(&outcome))
        }
    });
    built.close()?;
    let results = results?;

    for (i, (x, cells)) in points.iter().zip(results).enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(echo.iter().map(|(_, v)| v.clone()));
        row.extend([
            x.clone().into(),
            s.sigma.into(),
            s.n0.into(),
            s.n.into(),
            s.eta.into(),
            args.method.as_str().into(),
            s.seed.into(),
            args.exact.into(),
        ]);
        row.extend(cells);
        table.push(row);
    }
    with_output(args.output.output.as_deref(), out, |w| table.write(args.output.format.unwrap_or(Format::Json), w))
}

fn outcome_cells(o: &CertifyOutcome) -> Vec<Cell> {
    let e = &o.evidence;
    let g = e.gradient.as_ref();
    let d = e.dipole.as_ref();
    let budget = e.budget.split().iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
    vec![
        e.class.into(),
        o.certificate.radius.into(),
        o.certificate.abstained.into(),
        e.p_lb.into(),
        e.radius_first.into(),
        e.successes.into(),
        e.trials.into(),
        e.selection_counts.clone().into(),
        g.map(|g| g.v_hat).into(),
        g.map(|g| g.t).into(),
        g.map(|g| g.grad_ub).into(),
        g.map(|g| g.n_pairs).into(),
        d.map(|d| d.n11).into(),
        d.map(|d| d.n10).into(),
        d.map(|d| d.n01).into(),
        d.map(|d| d.n00).into(),
        d.map(|d| d.cs_lb).into(),
        d.map(|d| d.cn_lb).into(),
        budget.into(),
    ]
}

fn exact_cells(built: &Built, x: &[f64], params: SmoothingParams, method: Method) -> Result<Vec<Cell>> {
    let analytic = built.analytic().expect("checked by caller");
    let cert = certify_exact(analytic, x, params, method)?;
    let smoothed = analytic.smoothed(x, params)?;
    let masses = analytic.dipole_masses(x, params)?;
    let (p, grad) = (smoothed.p, (method == Method::Second).then_some(smoothed.grad_norm));
    let dipole = matches!(method, Method::Dipole | Method::Best);
    let mut cells = vec![Cell::Empty; RESULT_COLUMNS.len()];
    cells[0] = 1usize.into();
    cells[1] = cert.radius.into();
    cells[2] = cert.abstained.into();
    cells[3] = p.value().into();
    cells[4] = first_order_radius(p, params).into();
    cells[10] = grad.into();
    if dipole {
        cells[16] = masses.cs.value().into();
        cells[17] = masses.cn.value().into();
    }
    Ok(cells)
}
