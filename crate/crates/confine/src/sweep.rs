//! One-parameter sweeps of a field, aggregated into a single CSV.

use confine_core::certifier::{certify_convex_condition, CertifyOptions, Status};
use confine_core::monitors::confinement_report;
use confine_core::solver::{solve_bvp_1d, BoundaryData, GridSpec, NewtonOptions};
use confine_core::VectorField;

use crate::desc::{BodySpec, FieldSpec};
use crate::json::fmt_f64;
use crate::Error;

#[derive(Debug, Clone)]
pub enum SweepTask {
    /// Convex-condition certificate on the shell up to `shell_outer`.
    Certify {
        shell_outer: f64,
        opts: CertifyOptions,
    },
    /// 1D wall between `left` and `right`, with the largest signed distance
    /// of the solution to the body.
    Wall {
        grid: GridSpec,
        left: Vec<f64>,
        right: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub field: FieldSpec,
    pub body: BodySpec,
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub task: SweepTask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub value: f64,
    pub status: Status,
    /// Worst certificate margin, or largest signed distance of the wall.
    pub metric: f64,
    pub extra: Vec<f64>,
}

impl Sweep {
    /// Parameter values `from + k·step` up to `to`, inclusive up to rounding.
    pub fn values(&self) -> Result<Vec<f64>, Error> {
        if !(self.step > 0.0)
            || !(self.to >= self.from)
            || !self.from.is_finite()
            || !self.to.is_finite()
        {
            return Err(Error::invalid(
                "sweep range",
                "needs finite from ≤ to and a positive step",
            ));
        }
        let count = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| self.from + k as f64 * self.step)
            .collect())
    }

    pub fn run(&self) -> Result<Vec<Row>, Error> {
        let base = self.field.build()?;
        if let SweepTask::Certify { opts, .. } = &self.task {
            if opts.n_samples == 0 {
                return Err(Error::invalid("--samples", "must be at least 1"));
            }
        }
        let mut rows = Vec::new();
        for value in self.values()? {
            let field = with_param(&base, &self.param, value)?;
            let body = self.body.build(Some(&field))?;
            let row = match &self.task {
                SweepTask::Certify { shell_outer, opts } => {
                    let c = certify_convex_condition(&field, &body, *shell_outer, opts)
                        .map_err(|e| Error::invalid("sweep", e.to_string()))?;
                    Row {
                        value,
                        status: c.status,
                        metric: c.worst_margin,
                        extra: c.witness,
                    }
                }
                SweepTask::Wall { grid, left, right } => {
                    let bc = BoundaryData::interval(left.clone(), right.clone());
                    let sol = solve_bvp_1d(&field, *grid, &bc, &NewtonOptions::default())
                        .map_err(|e| Error::invalid("sweep", e.to_string()))?;
                    let rep = confinement_report(&sol, &body, 1e-6)
                        .map_err(|e| Error::invalid("sweep", e.to_string()))?;
                    let status = if sol.converged && rep.pass {
                        Status::Pass
                    } else {
                        Status::Fail
                    };
                    Row {
                        value,
                        status,
                        metric: rep.extremum,
                        extra: vec![sol.residual_norm, if sol.converged { 1.0 } else { 0.0 }],
                    }
                }
            };
            rows.push(row);
        }
        Ok(rows)
    }

    pub fn to_csv(&self, rows: &[Row]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![self.param.clone(), "status".into()];
        match &self.task {
            SweepTask::Certify { .. } => {
                header.push("worst_margin".into());
                let m = rows.first().map_or(0, |r| r.extra.len());
                header.extend((1..=m).map(|k| format!("witness_{k}")));
            }
            SweepTask::Wall { .. } => {
                header.extend(
                    ["max_signed_distance", "residual_norm", "converged"].map(String::from),
                );
            }
        }
        w.write_record(&header).expect("in-memory CSV");
        for r in rows {
            let status = match r.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Inconclusive => "inconclusive",
            };
            let mut rec = vec![fmt_f64(r.value), status.to_string(), fmt_f64(r.metric)];
            match &self.task {
                SweepTask::Wall { .. } => {
                    rec.push(fmt_f64(r.extra[0]));
                    rec.push((r.extra[1] == 1.0).to_string());
                }
                SweepTask::Certify { .. } => rec.extend(r.extra.iter().copied().map(fmt_f64)),
            }
            w.write_record(&rec).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("UTF-8")
    }
}

/// First parameter value whose status is pass with every earlier one a
/// fail, if the sweep flips exactly once.
pub fn crossing(rows: &[Row]) -> Option<f64> {
    let k = rows.iter().position(|r| r.status == Status::Pass)?;
    let clean = k > 0
        && rows[..k].iter().all(|r| r.status == Status::Fail)
        && rows[k..].iter().all(|r| r.status == Status::Pass);
    clean.then(|| rows[k].value)
}

fn with_param(field: &VectorField, name: &str, value: f64) -> Result<VectorField, Error> {
    field
        .with_param(name, value)
        .map_err(|e| Error::invalid("--param", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_include_endpoint() {
        let s = Sweep {
            field: FieldSpec::parse("gp 1 1 2 1").unwrap(),
            body: BodySpec::GpEllipse,
            param: "g12".into(),
            from: 0.5,
            to: 3.0,
            step: 0.05,
            task: SweepTask::Certify {
                shell_outer: 2.0,
                opts: CertifyOptions::default(),
            },
        };
        let v = s.values().unwrap();
        assert_eq!(v.len(), 51);
        assert!((v[50] - 3.0).abs() < 1e-12);
    }
}
