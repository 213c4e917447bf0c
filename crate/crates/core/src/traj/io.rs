//! Dataset CSV: `traj_id,label,t,x0[,x1,...]`, one row per sample, label 1
//! for positives and 0 for negatives, `t` the sample index.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::stl::{LabeledDataset, Trajectory};

pub fn write_dataset_csv<W: Write>(d: &LabeledDataset, out: W) -> Result<()> {
    let (dim, n_points) = d.shape()?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["traj_id".to_string(), "label".to_string(), "t".to_string()];
    header.extend((0..dim).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (id, (positive, traj)) in d.iter().enumerate() {
        for t in 0..n_points {
            let mut row = vec![id.to_string(), if positive { "1" } else { "0" }.to_string(), t.to_string()];
            row.extend((0..dim).map(|k| traj.value(k, t).to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<LabeledDataset> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let fields: Vec<&str> = headers.iter().collect();
    if fields.len() < 4 || fields[..3] != ["traj_id", "label", "t"] {
        return Err(Error::InvalidDataset("header must start with traj_id,label,t,x0".into()));
    }
    for (k, name) in fields[3..].iter().enumerate() {
        if *name != format!("x{k}") {
            return Err(Error::InvalidDataset(format!("column {} should be x{k}, found {name}", k + 3)));
        }
    }
    let dim = fields.len() - 3;

    let mut d = LabeledDataset::default();
    let mut current: Option<(String, bool, Vec<Vec<f64>>)> = None;
    let mut seen = std::collections::HashSet::new();

    let finish = |cur: (String, bool, Vec<Vec<f64>>), d: &mut LabeledDataset| -> Result<()> {
        let (_, positive, channels) = cur;
        let traj = Trajectory::from_channels(channels, 1.0)?;
        if positive {
            d.positives.push(traj);
        } else {
            d.negatives.push(traj);
        }
        Ok(())
    };

    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        if rec.len() != dim + 3 {
            return Err(Error::InvalidDataset(format!("row {row}: expected {} fields", dim + 3)));
        }
        let id = rec[0].to_string();
        let positive = match &rec[1] {
            "1" => true,
            "0" => false,
            other => return Err(Error::InvalidDataset(format!("row {row}: label must be 0 or 1, found {other}"))),
        };
        let t: usize = rec[2]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidDataset(format!("row {row}: t must be a sample index")))?;
        let values = (0..dim)
            .map(|k| {
                rec[3 + k]
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidDataset(format!("row {row}: bad value in x{k}")))
            })
            .collect::<Result<Vec<f64>>>()?;

        let starts_new = current.as_ref().is_none_or(|(cur_id, _, _)| *cur_id != id);
        if starts_new {
            if let Some(done) = current.take() {
                finish(done, &mut d)?;
            }
            if !seen.insert(id.clone()) {
                return Err(Error::InvalidDataset(format!("row {row}: rows of trajectory {id} are not contiguous")));
            }
            current = Some((id.clone(), positive, vec![Vec::new(); dim]));
        }
        let (_, label, channels) = current.as_mut().expect("current trajectory");
        if *label != positive {
            return Err(Error::InvalidDataset(format!("row {row}: label changes within trajectory {id}")));
        }
        if t != channels[0].len() {
            return Err(Error::InvalidDataset(format!("row {row}: expected t = {}, found {t}", channels[0].len())));
        }
        for (c, v) in channels.iter_mut().zip(values) {
            c.push(v);
        }
    }
    if let Some(done) = current.take() {
        finish(done, &mut d)?;
    }
    d.shape()?;
    Ok(d)
}

pub fn save_dataset(d: &LabeledDataset, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_dataset_csv(d, std::io::BufWriter::new(f))
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let f = std::fs::File::open(path)?;
    read_dataset_csv(std::io::BufReader::new(f))
}
