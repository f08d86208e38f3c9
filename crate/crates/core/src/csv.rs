//! CSV writers for traces and sweeps. Floats are written with 17
//! significant digits so every value round-trips exactly.

use std::fmt::Write as _;

use crate::control::ControlTrace;
use crate::harness::SweepCell;

pub const TRACE_HEADER: &str = "iter,x,y,u,x_des,e";
pub const SWEEP_HEADER: &str = "sweep,cell_param,sigma_d,sigma_dw,mean_rmse,std_rmse,trials,escaped,alpha";

/// `v` with 17 significant digits.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn trace_header(n_obs: usize) -> String {
    if n_obs == 2 {
        return TRACE_HEADER.to_string();
    }
    let mut h = String::from("iter");
    for k in 0..n_obs {
        let _ = write!(h, ",x{k}");
    }
    h.push_str(",u,x_des,e");
    h
}

/// Trace rows under the `iter,x,y,u,x_des,e` header.
pub fn write_trace(out: &mut String, trace: &ControlTrace) {
    let n_obs = trace.records.first().map_or(2, |r| r.observables.len());
    out.push_str(&trace_header(n_obs));
    out.push('\n');
    for r in &trace.records {
        let _ = write!(out, "{}", r.iter);
        for v in &r.observables {
            let _ = write!(out, ",{}", float(*v));
        }
        let _ = writeln!(out, ",{},{},{}", float(r.u), float(r.x_des), float(r.e));
    }
}

/// Sweep rows under [`SWEEP_HEADER`].
pub fn write_sweep(out: &mut String, cells: &[SweepCell]) {
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.sweep,
            float(c.cell_param),
            float(c.sigma_d),
            float(c.sigma_dw),
            float(c.mean_rmse),
            float(c.std_rmse),
            c.trials,
            c.escaped,
            float(c.alpha)
        );
    }
}
