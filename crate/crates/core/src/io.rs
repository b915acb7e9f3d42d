//! CSV formats: simulation traces, snap events and period datasets.
//! Numbers are written with 9 significant digits.

use std::io::{Read, Write};

use crate::calibration::{PeriodDataset, PeriodPoint};
use crate::error::{Error, Result};
use crate::simulator::{PatternTimeline, Trace};

pub const TRACE_HEADER: &str = "t_s,w_mm,T1_C,T2_C,branch,sw1,sw2,I1_A,I2_A";
pub const EVENTS_HEADER: &str = "t_s,event,direction";
pub const DATASET_HEADER: &str = "current_A,period_s";
pub const PATTERN_HEADER: &str = "t_start_s,t_end_s,pattern_1,pattern_2";

/// Rounds to 9 significant digits and prints the shortest exact form.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn bit(b: bool) -> u8 {
    u8::from(b)
}

pub fn write_trace_csv<W: Write>(trace: &Trace, mut out: W) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            sig9(r.t),
            sig9(r.w),
            sig9(r.t1),
            sig9(r.t2),
            r.branch.index(),
            bit(r.switch_1_closed),
            bit(r.switch_2_closed),
            sig9(r.i1),
            sig9(r.i2)
        )?;
    }
    Ok(())
}

pub fn write_events_csv<W: Write>(trace: &Trace, mut out: W) -> Result<()> {
    writeln!(out, "{EVENTS_HEADER}")?;
    for e in &trace.events {
        writeln!(out, "{},snap,{}", sig9(e.t), e.direction.as_str())?;
    }
    Ok(())
}

pub fn write_pattern_csv<W: Write>(timeline: &PatternTimeline, mut out: W) -> Result<()> {
    writeln!(out, "{PATTERN_HEADER}")?;
    for s in &timeline.segments {
        writeln!(
            out,
            "{},{},{},{}",
            sig9(s.start),
            sig9(s.end),
            bit(s.a),
            bit(s.b)
        )?;
    }
    Ok(())
}

/// Reads `current_A,period_s[,weight]`; a missing weight defaults to 1.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<PeriodDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ci), Some(cp)) = (col("current_A"), col("period_s")) else {
        return Err(Error::Parse(format!(
            "dataset header must contain current_A and period_s, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    };
    let cw = col("weight");
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let num = |c: usize, what: &str| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: bad {what} `{raw}`", i + 1)))
        };
        let weight = match cw {
            Some(c) if !rec.get(c).unwrap_or("").is_empty() => num(c, "weight")?,
            _ => 1.0,
        };
        points.push(PeriodPoint {
            current: num(ci, "current_A")?,
            period: num(cp, "period_s")?,
            weight,
        });
    }
    PeriodDataset::new(points)
}

pub fn write_dataset_csv<W: Write>(dataset: &PeriodDataset, mut out: W) -> Result<()> {
    let weighted = dataset.points.iter().any(|p| p.weight != 1.0);
    if weighted {
        writeln!(out, "{DATASET_HEADER},weight")?;
    } else {
        writeln!(out, "{DATASET_HEADER}")?;
    }
    for p in &dataset.points {
        if weighted {
            writeln!(
                out,
                "{},{},{}",
                sig9(p.current),
                sig9(p.period),
                sig9(p.weight)
            )?;
        } else {
            writeln!(out, "{},{}", sig9(p.current), sig9(p.period))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OscillatorConfig;
    use crate::simulator::run;
    use proptest::prelude::*;

    #[test]
    fn trace_csv_has_documented_header_and_rows() {
        let (trace, _) = run(&OscillatorConfig::paper(0.6), 2.5, 1e-2).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        assert_eq!(lines.count(), trace.rows.len());

        let mut ev = Vec::new();
        write_events_csv(&trace, &mut ev).unwrap();
        let ev = String::from_utf8(ev).unwrap();
        assert!(ev.starts_with(EVENTS_HEADER));
        assert!(ev.lines().nth(1).unwrap().ends_with(",snap,thru"));
    }

    #[test]
    fn dataset_with_and_without_weights() {
        let plain = "current_A,period_s\n0.55,9.1\n0.6,4.2\n";
        let ds = read_dataset_csv(plain.as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.points[1].weight, 1.0);
        let weighted = "current_A, period_s, weight\n0.55, 9.1, 2\n";
        let ds = read_dataset_csv(weighted.as_bytes()).unwrap();
        assert_eq!(ds.points[0].weight, 2.0);
        assert!(read_dataset_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_dataset_csv("current_A,period_s\nx,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn nine_digit_values_survive_csv(
            rows in prop::collection::vec((0.01f64..5.0, 0.01f64..100.0, 0.1f64..3.0), 1..20),
        ) {
            let points: Vec<PeriodPoint> = rows
                .iter()
                .map(|&(i, t, w)| PeriodPoint {
                    current: sig9(i).parse().unwrap(),
                    period: sig9(t).parse().unwrap(),
                    weight: sig9(w).parse().unwrap(),
                })
                .collect();
            let ds = PeriodDataset::new(points).unwrap();
            let mut buf = Vec::new();
            write_dataset_csv(&ds, &mut buf).unwrap();
            let back = read_dataset_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, ds);
        }

        #[test]
        fn sig9_keeps_nine_digits(m in -10.0f64..10.0, e in -30i32..30) {
            let x = m * 10f64.powi(e);
            let text = sig9(x);
            let y: f64 = text.parse().unwrap();
            prop_assert!((x - y).abs() <= 5e-9 * x.abs().max(1e-300));
            prop_assert!(text.len() <= 16, "{}", text);
        }
    }
}
