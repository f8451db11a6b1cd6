//! CSV output and the trajectory reader.

use std::io::{Read, Write};
use std::path::Path;

use trajopt_core::ocp::{Trajectory, Vector};
use trajopt_core::solvers::IterateLog;

use crate::error::CliError;

/// 17 significant digits, enough to round-trip every `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub const ITERATE_COLUMNS: [&str; 7] = [
    "k",
    "cost",
    "grad_sq_norm",
    "step_size",
    "feasibility_residual",
    "pmp_residual",
    "wall_time_s",
];

pub fn write_iterates<W: Write>(out: W, log: &IterateLog) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ITERATE_COLUMNS)?;
    for r in log.records() {
        w.write_record([
            r.k.to_string(),
            num(r.cost),
            num(r.grad_sq_norm),
            num(r.step_size),
            num(r.feasibility_residual),
            num(r.pmp_residual),
            num(r.wall_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t, x_0.., u_0.., x_ref_0.., u_ref_0..`; the last row has empty inputs.
pub fn write_trajectory<W: Write>(
    out: W,
    traj: &Trajectory,
    delta: f64,
    x_ref: &[Vector],
    u_ref: &[Vector],
) -> Result<(), CliError> {
    let (n, m) = (traj.state_dim(), traj.input_dim());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend((0..m).map(|i| format!("u_{i}")));
    header.extend((0..n).map(|i| format!("x_ref_{i}")));
    header.extend((0..m).map(|i| format!("u_ref_{i}")));
    w.write_record(&header)?;
    let steps = traj.steps();
    for t in 0..=steps {
        let mut row = vec![num(t as f64 * delta)];
        row.extend(traj.x()[t].iter().map(|&v| num(v)));
        let inputs = |row: &mut Vec<String>, u: Option<&Vector>| match u {
            Some(u) => row.extend(u.iter().map(|&v| num(v))),
            None => row.extend((0..m).map(|_| String::new())),
        };
        inputs(&mut row, traj.u().get(t));
        row.extend(x_ref[t].iter().map(|&v| num(v)));
        inputs(&mut row, u_ref.get(t));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `x_<i>` and `u_<i>` columns of a trajectory-style CSV.
///
/// Returns `T + 1` states and `T` inputs: every row must carry a full state,
/// the last row's inputs must be empty and all others full. Other columns
/// are ignored.
pub fn read_trajectory<R: Read>(input: R) -> Result<(Vec<Vector>, Vec<Vector>), CliError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let indexed = |prefix: &str| -> Result<Vec<usize>, CliError> {
        let mut cols = Vec::new();
        while let Some(pos) = headers.iter().position(|h| h == format!("{prefix}{}", cols.len())) {
            cols.push(pos);
        }
        if cols.is_empty() {
            return Err(CliError::config("trajectory csv", format!("no `{prefix}0` column")));
        }
        Ok(cols)
    };
    let x_cols = indexed("x_")?;
    let u_cols = indexed("u_")?;
    let mut xs = Vec::new();
    let mut us: Vec<Option<Vector>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: String| CliError::config("trajectory csv", format!("data row {}: {what}", line + 1));
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let parse = |c: usize| -> Result<f64, CliError> {
            field(c)
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", headers.get(c).unwrap_or("?"))))
        };
        let x = x_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>, _>>()?;
        xs.push(Vector::from_vec(x));
        if u_cols.iter().all(|&c| field(c).is_empty()) {
            us.push(None);
        } else {
            let u = u_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>, _>>()?;
            us.push(Some(Vector::from_vec(u)));
        }
    }
    match us.pop() {
        Some(None) if !us.is_empty() => {}
        _ => {
            return Err(CliError::config(
                "trajectory csv",
                "need at least two rows and empty inputs on the last row",
            ))
        }
    }
    let us = us
        .into_iter()
        .enumerate()
        .map(|(t, u)| u.ok_or_else(|| CliError::config("trajectory csv", format!("data row {}: missing inputs", t + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((xs, us))
}

pub fn read_trajectory_file(path: &Path) -> Result<(Vec<Vector>, Vec<Vector>), CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::config("trajectory csv", format!("cannot open {}: {e}", path.display())))?;
    read_trajectory(std::io::BufReader::new(file))
}

/// `k` followed by one `grad_sq_norm` column per run; runs that stopped
/// earlier leave empty cells.
pub fn write_comparison<W: Write>(out: W, runs: &[(String, &IterateLog)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend(runs.iter().map(|(name, _)| name.clone()));
    w.write_record(&header)?;
    let rows = runs.iter().map(|(_, log)| log.len()).max().unwrap_or(0);
    for k in 0..rows {
        let mut row = vec![k.to_string()];
        row.extend(
            runs.iter()
                .map(|(_, log)| log.records().get(k).map_or(String::new(), |r| num(r.grad_sq_norm))),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn trajectory_csv_reads_back() {
        let traj = Trajectory::new(
            vec![
                Vector::from_row_slice(&[0.1, -0.2]),
                Vector::from_row_slice(&[1.0 / 3.0, 2.0]),
                Vector::from_row_slice(&[4.0, 5.0]),
            ],
            vec![Vector::from_element(1, 0.7), Vector::from_element(1, -1e-9)],
        )
        .unwrap();
        let x_ref = vec![Vector::zeros(2); 3];
        let u_ref = vec![Vector::zeros(1); 2];
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj, 0.5, &x_ref, &u_ref).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x_0,x_1,u_0,x_ref_0,x_ref_1,u_ref_0\n"));
        let (xs, us) = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(Trajectory::new(xs, us).unwrap(), traj);
    }

    #[test]
    fn reader_rejects_inputs_on_last_row() {
        let text = "x_0,u_0\n1,2\n3,4\n";
        assert!(read_trajectory(text.as_bytes()).is_err());
        let text = "x_0,u_0\n1,\n3,\n";
        assert!(read_trajectory(text.as_bytes()).is_err());
        let (xs, us) = read_trajectory("x_0,u_0\n1,2\n3,\n".as_bytes()).unwrap();
        assert_eq!((xs.len(), us.len()), (2, 1));
    }
}
