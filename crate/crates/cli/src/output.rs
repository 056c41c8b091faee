//! CSV and summary emission. Floats are written with 17 significant digits so
//! that every value round-trips exactly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use twocharge_core::{DistanceReport, LinearFit, StateVector, Trajectory};

pub const TRAJECTORY_HEADER: &str =
    "t,x1,y1,z1,x2,y2,z2,vx1,vy1,vz1,vx2,vy2,vz2,ax1,ay1,az1,ax2,ay2,az2,r,smax";

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    // writing to memory cannot fail, and every field is valid UTF-8
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("UTF-8 CSV")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

pub fn trajectory_csv(tr: &Trajectory, stride: usize) -> String {
    let knots = tr.segment.knots();
    let mut w = writer();
    w.write_record(TRAJECTORY_HEADER.split(',')).expect("in-memory CSV");
    let last = knots.len().saturating_sub(1);
    for (i, k) in knots.iter().enumerate() {
        if i % stride != 0 && i != last {
            continue;
        }
        let x = StateVector::from_array(&k.x);
        let dx = StateVector::from_array(&k.dx);
        let mut fields = vec![float(k.t)];
        for v in [x.r1, x.r2, x.v1, x.v2, dx.v1, dx.v2] {
            fields.extend(v.iter().map(|c| float(*c)));
        }
        fields.push(float(x.separation()));
        fields.push(float(x.max_speed()));
        w.write_record(&fields).expect("in-memory CSV");
    }
    finish(w)
}

pub fn distance_csv(rows: &[DistanceReport]) -> String {
    let mut w = writer();
    w.write_record(["n_from", "n_to", "t_max", "d_r1", "d_r2"]).expect("in-memory CSV");
    for d in rows {
        w.write_record([
            d.n_from.to_string(),
            d.n_to.to_string(),
            float(d.t_max),
            float(d.d_r1),
            float(d.d_r2),
        ])
        .expect("in-memory CSV");
    }
    finish(w)
}

/// One row of a singularity-time sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta: f64,
    pub level: usize,
    pub outcome: Result<f64, String>,
}

/// Sweep table; the linear fit follows as a `#` footer line.
pub fn sweep_csv(rows: &[SweepRow], fit: Option<Result<LinearFit, String>>) -> String {
    let mut w = writer();
    w.write_record(["eta", "level", "status", "t_n", "detail"]).expect("in-memory CSV");
    for r in rows {
        let (status, t, detail) = match &r.outcome {
            Ok(t) => ("ok", float(*t), String::new()),
            Err(e) => ("failed", String::new(), e.clone()),
        };
        w.write_record([float(r.eta), r.level.to_string(), status.into(), t, detail])
            .expect("in-memory CSV");
    }
    let mut out = finish(w);
    match fit {
        Some(Ok(f)) => out.push_str(&format!(
            "# fit: slope={}, intercept={}, r_squared={}\n",
            float(f.slope),
            float(f.intercept),
            float(f.r_squared)
        )),
        Some(Err(e)) => out.push_str(&format!("# fit: unavailable ({e})\n")),
        None => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 720.889_123_456_789_1, f64::MAX] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn sweep_footer_and_failures() {
        let rows = vec![
            SweepRow { eta: 1.0, level: 0, outcome: Ok(720.0) },
            SweepRow { eta: 2.0, level: 0, outcome: Err("stalled \"here\"".into()) },
        ];
        let csv = sweep_csv(&rows, Some(Err("need two points".into())));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "2.0000000000000000e0,0,failed,,\"stalled \"\"here\"\"\"");
        assert!(lines[3].starts_with("# fit: unavailable"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("a.csv");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
    }
}
