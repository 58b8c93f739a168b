//! CSV writers for model internals and tabular results.

use std::io::Write;

use crate::model::ModelParams;
use crate::scalar::Scalar;

pub type CsvResult = Result<(), csv::Error>;

/// `p[h][k]` as a row-major matrix with a header row of `k` indices.
pub fn write_encounter_csv<T: Scalar, W: Write>(params: &ModelParams<T>, out: W) -> CsvResult {
    let n = params.n();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["h\\k".to_string()];
    header.extend((1..=n).map(|k| k.to_string()));
    w.write_record(&header)?;
    for h in 1..=n {
        let mut row = vec![h.to_string()];
        row.extend((1..=n).map(|k| params.encounter().get(h, k).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-class vectors: `class, r_avg, tau, w`.
pub fn write_class_vectors_csv<T: Scalar, W: Write>(params: &ModelParams<T>, out: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "r_avg", "tau", "w"])?;
    for j in 1..=params.n() {
        w.write_record([
            j.to_string(),
            params.grid().average(j).to_string(),
            params.tax().rate(j).to_string(),
            params.welfare().weight(j).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `C[i][h][k]` in row-major order, one entry per line.
pub fn write_tensor_csv<T: Scalar, W: Write>(params: &ModelParams<T>, out: W) -> CsvResult {
    let n = params.n();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "h", "k", "C"])?;
    for i in 1..=n {
        for h in 1..=n {
            for k in 1..=n {
                w.write_record([
                    i.to_string(),
                    h.to_string(),
                    k.to_string(),
                    params.tensor().get(i, h, k).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Two-column histogram data: `class, value`.
pub fn write_histogram_csv<T: Scalar, W: Write>(
    value_name: &str,
    rows: impl IntoIterator<Item = (usize, T)>,
    out: W,
) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", value_name])?;
    for (class, v) in rows {
        w.write_record([class.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn matrix_layout() {
        let cfg = ModelConfig {
            n: 3,
            c: 10.0,
            ..ModelConfig::default()
        };
        let m: ModelParams<f64> = cfg.build().unwrap();
        let mut buf = Vec::new();
        write_encounter_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "h\\k,1,2,3");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,0,0,0"));

        let mut buf = Vec::new();
        write_tensor_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 27);
        assert!(text.lines().nth(1).unwrap().starts_with("1,1,1,"));
    }
}
