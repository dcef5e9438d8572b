use std::io::Write;

use anyhow::Result;
use smoothcert::certificates::{certificate_curve, CurveRequest, Grid, SmoothingParams};
use smoothcert::normal::Probability;

use crate::args::{parse_range, CurveArgs, CurveKind, Range};
use crate::table::{Cell, Format, Table};
use crate::{with_output, UsageError};

fn grid(r: Range) -> Result<Grid> {
    Grid::new(r.from, r.to, r.steps).map_err(|e| UsageError(e.to_string()).into())
}

pub fn cmd_curve(args: &CurveArgs, out: &mut dyn Write) -> Result<()> {
    let params = SmoothingParams::new(args.sigma).map_err(|e| UsageError(e.to_string()))?;
    let request = match args.kind {
        CurveKind::Bound => {
            let p: f64 = args.p.parse().map_err(|_| UsageError(format!("--p must be a number for kind bound, got {:?}", args.p)))?;
            let p = Probability::new(p).map_err(|e| UsageError(e.to_string()))?;
            let rho = args.rho.ok_or_else(|| UsageError("--kind bound requires --rho FROM:TO:STEPS".into()))?;
            CurveRequest::BoundVsDistance { p, grad_norm: args.grad, params, rho: grid(rho)? }
        }
        CurveKind::Radius => {
            let p = parse_range(&args.p).map_err(|e| UsageError(format!("--p for kind radius: {e}")))?;
            if !(p.from > 0.0 && p.to < 1.0) {
                return Err(UsageError(format!("--p range must lie inside (0, 1), got {}", args.p)).into());
            }
            CurveRequest::RadiusVsP { p: grid(p)?, grads: args.grads.clone(), params }
        }
    };
    let curve = certificate_curve(&request).map_err(|e| UsageError(e.to_string()))?;
    let mut table = Table::new(curve.columns);
    for row in curve.rows {
        table.push(row.into_iter().map(Cell::Float).collect());
    }
    with_output(args.output.output.as_deref(), out, |w| table.write(args.output.format.unwrap_or(Format::Csv), w))
}
