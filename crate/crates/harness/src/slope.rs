//! Log-log fit of median stopping time against epsilon.

use std::path::Path;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of `ln T = intercept + slope * ln eps` over the points
/// with a finite, positive median.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit, HarnessError> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(e, t)| *e > 0.0 && e.is_finite() && *t > 0.0 && t.is_finite())
        .map(|(e, t)| (e.ln(), t.ln()))
        .collect();
    if logs.len() < 2 {
        return Err(HarnessError::Slope(format!(
            "need at least 2 points with finite median, got {}",
            logs.len()
        )));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(HarnessError::Slope("all epsilon values coincide".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (sse / n).sqrt(),
        points: logs.len(),
    })
}

/// Read `(epsilon, median_T_eps)` pairs from a grid summary; `NA` medians
/// are returned as infinite.
pub fn read_grid_summary(path: &Path) -> Result<Vec<(f64, f64)>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Csv(format!("{}: missing column {name}", path.display())))
    };
    let (ie, it) = (col("epsilon")?, col("median_T_eps")?);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let eps: f64 = rec[ie]
            .parse()
            .map_err(|_| HarnessError::Csv(format!("bad epsilon `{}`", &rec[ie])))?;
        let t = match &rec[it] {
            "NA" => f64::INFINITY,
            v => v
                .parse()
                .map_err(|_| HarnessError::Csv(format!("bad median_T_eps `{v}`")))?,
        };
        out.push((eps, t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts = [(0.1, 0.1f64.powf(-1.5)), (0.01, 0.01f64.powf(-1.5))];
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12, "{}", fit.slope);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn flat_data() {
        let fit = fit_slope(&[(0.1, 7.0), (0.01, 7.0), (0.001, 7.0)]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_slope(&[(0.1, 3.0)]).is_err());
        assert!(fit_slope(&[(0.1, 3.0), (0.1, 4.0)]).is_err());
        assert!(fit_slope(&[(0.1, 3.0), (0.01, f64::INFINITY)]).is_err());
    }

    #[test]
    fn unreached_points_are_dropped() {
        let fit = fit_slope(&[(0.1, 10.0), (0.01, 100.0), (0.001, f64::INFINITY)]).unwrap();
        assert_eq!(fit.points, 2);
        assert!((fit.slope + 1.0).abs() < 1e-12);
    }
}
