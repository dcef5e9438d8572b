mod certify;
mod compare;
mod curve;
mod swissroll;

pub use certify::cmd_certify;
pub use compare::{cmd_compare, Summary};
pub use curve::cmd_curve;
pub use swissroll::{cmd_swissroll, two_spirals};

use anyhow::Result;

use crate::args::PointArgs;
use crate::classifier::load_points;
use crate::UsageError;

/// All points named by `--x`, `--points` and `--grid`, in that order.
pub(crate) fn collect_points(args: &PointArgs) -> Result<Vec<Vec<f64>>> {
    let mut points = args.x.clone();
    if let Some(path) = &args.points {
        points.extend(load_points(path)?);
    }
    if let Some(segment) = &args.grid {
        points.extend(segment.points());
    }
    let Some(first) = points.first() else {
        return Err(UsageError("no points given; use --x, --points or --grid".into()).into());
    };
    let dim = first.len();
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(UsageError(format!("point {bad} has dimension {}, expected {dim}", points[bad].len())).into());
    }
    Ok(points)
}
