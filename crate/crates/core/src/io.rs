//! CSV format for censored datasets.
//!
//! Header `coord_1,...,coord_d,value,status,lower,upper`. `status` is `obs`
//! or `cens`; an empty `lower`/`upper` field is an infinite bound and an
//! empty `value` is allowed only on censored rows.

use std::io::{Read, Write};
use std::path::Path;

use crate::censored::{CensoredDataset, SiteStatus};
use crate::error::{Error, Result};
use crate::kernel::{LocationSet, Metric};

/// Shortest text with 17 significant digits, enough to round-trip any
/// finite `f64`.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn bound_field(v: f64) -> String {
    if v.is_infinite() {
        String::new()
    } else {
        format_f64(v)
    }
}

pub fn read_dataset(path: impl AsRef<Path>, metric: Metric) -> Result<CensoredDataset> {
    read_dataset_from(std::fs::File::open(path)?, metric)
}

pub fn read_dataset_from(reader: impl Read, metric: Metric) -> Result<CensoredDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let d = cols.len().checked_sub(4).filter(|&d| d >= 1).ok_or_else(|| Error::Data {
        row: 1,
        message: "header needs coord_1..coord_d,value,status,lower,upper".into(),
    })?;
    let expected: Vec<String> =
        (1..=d).map(|k| format!("coord_{k}")).chain(["value", "status", "lower", "upper"].map(String::from)).collect();
    if cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Data { row: 1, message: format!("unexpected header {cols:?}, expected {expected:?}") });
    }
    let mut coords = Vec::new();
    let mut status = Vec::new();
    let mut values = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Data { row: line, message: e.to_string() })?;
        if rec.len() != d + 4 {
            return Err(Error::Data { row: line, message: format!("expected {} fields, found {}", d + 4, rec.len()) });
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Data { row: line, message: format!("cannot parse {what} {s:?}") })
        };
        for j in 0..d {
            let c = num(&rec[j], "coordinate")?;
            if !c.is_finite() {
                return Err(Error::Data { row: line, message: "non-finite coordinate".into() });
            }
            coords.push(c);
        }
        let st = match &rec[d + 1] {
            "obs" => SiteStatus::Observed,
            "cens" => SiteStatus::Censored,
            other => {
                return Err(Error::Data { row: line, message: format!("status must be obs or cens, got {other:?}") })
            }
        };
        let value = match &rec[d] {
            "" => None,
            s => Some(num(s, "value")?),
        };
        if st == SiteStatus::Observed && value.is_none_or(|v| !v.is_finite()) {
            return Err(Error::Data { row: line, message: "observed row needs a finite value".into() });
        }
        let lo = match &rec[d + 2] {
            "" => f64::NEG_INFINITY,
            s => num(s, "lower bound")?,
        };
        let hi = match &rec[d + 3] {
            "" => f64::INFINITY,
            s => num(s, "upper bound")?,
        };
        if st == SiteStatus::Censored && !(lo < hi) {
            return Err(Error::Data {
                row: line,
                message: format!("censoring interval lower {lo} must be below upper {hi}"),
            });
        }
        status.push(st);
        values.push(value);
        lower.push(lo);
        upper.push(hi);
    }
    let locations = LocationSet::from_flat(coords, d, metric)?;
    CensoredDataset::new(locations, status, values, lower, upper).map_err(|e| match e {
        Error::Data { row, message } => Error::Data { row: row + 2, message },
        other => other,
    })
}

pub fn write_dataset(path: impl AsRef<Path>, data: &CensoredDataset) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_dataset_to(std::io::BufWriter::new(f), data)
}

pub fn write_dataset_to(writer: impl Write, data: &CensoredDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = data.locations().dim();
    let mut header: Vec<String> = (1..=d).map(|k| format!("coord_{k}")).collect();
    header.extend(["value", "status", "lower", "upper"].map(String::from));
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.locations().point(i).iter().map(|&c| format_f64(c)).collect();
        rec.push(data.values()[i].map(format_f64).unwrap_or_default());
        match data.status()[i] {
            SiteStatus::Observed => rec.extend(["obs".into(), String::new(), String::new()]),
            SiteStatus::Censored => {
                rec.push("cens".into());
                rec.push(bound_field(data.lower()[i]));
                rec.push(bound_field(data.upper()[i]));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "coord_1,coord_2,value,status,lower,upper\n\
        0.0,0.0,1.5,obs,,\n\
        0.5,0.0,2.25,obs,,\n\
        0.0,0.5,,cens,,1.0\n";

    #[test]
    fn reads_a_small_file() {
        let d = read_dataset_from(SAMPLE.as_bytes(), Metric::Euclidean).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.observed_indices().len(), 2);
        assert_eq!(d.values()[1], Some(2.25));
        assert_eq!(d.lower()[2], f64::NEG_INFINITY);
        assert_eq!(d.upper()[2], 1.0);
    }

    #[test]
    fn round_trip_is_exact() {
        let locs = LocationSet::new(&[vec![0.1, 1.0 / 3.0], vec![2.0f64.sqrt(), -7.25e-9]], Metric::Euclidean).unwrap();
        let data = CensoredDataset::new(
            locs,
            vec![SiteStatus::Observed, SiteStatus::Censored],
            vec![Some(std::f64::consts::PI), None],
            vec![f64::NEG_INFINITY, -0.1],
            vec![f64::INFINITY, 1.0 / 7.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, &data).unwrap();
        let back = read_dataset_from(buf.as_slice(), Metric::Euclidean).unwrap();
        assert_eq!(back, data);
        let mut again = Vec::new();
        write_dataset_to(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "coord_1,value,status,lower,upper\n0.0,1.0,obs,,\n0.5,,cens,2.0,1.0\n";
        match read_dataset_from(bad.as_bytes(), Metric::Euclidean) {
            Err(Error::Data { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let missing = "coord_1,value,status,lower,upper\n0.0,,obs,,\n";
        assert!(matches!(read_dataset_from(missing.as_bytes(), Metric::Euclidean), Err(Error::Data { row: 2, .. })));
        let status = "coord_1,value,status,lower,upper\n0.0,1,observed,,\n";
        assert!(matches!(read_dataset_from(status.as_bytes(), Metric::Euclidean), Err(Error::Data { row: 2, .. })));
        let short = "coord_1,value,status,lower,upper\n0.0,1,obs\n";
        assert!(read_dataset_from(short.as_bytes(), Metric::Euclidean).is_err());
        let header = "x,value,status,lower,upper\n";
        assert!(matches!(read_dataset_from(header.as_bytes(), Metric::Euclidean), Err(Error::Data { row: 1, .. })));
    }
}
