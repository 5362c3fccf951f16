//! Result rows and atomic CSV persistence.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// CSV column names, in order.
pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "n",
    "beta",
    "replica",
    "observable",
    "value",
    "stderr",
    "wall_ms",
    "seed",
];

/// One observable of one replica. Aggregates over replicas leave `replica` empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub n: Option<usize>,
    pub beta: Option<f64>,
    pub replica: Option<u64>,
    pub observable: String,
    pub value: f64,
    pub stderr: f64,
    pub wall_ms: u64,
    pub seed: u64,
}

impl ResultRow {
    fn fields(&self) -> [String; 9] {
        let opt = |x: Option<String>| x.unwrap_or_default();
        [
            self.experiment.clone(),
            opt(self.n.map(|n| n.to_string())),
            opt(self.beta.map(|b| b.to_string())),
            opt(self.replica.map(|r| r.to_string())),
            self.observable.clone(),
            self.value.to_string(),
            self.stderr.to_string(),
            self.wall_ms.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Render `# ` comment lines followed by the CSV header and rows.
pub fn render_csv(comments: &[String], rows: &[ResultRow]) -> Result<String> {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::NumericalFailure(format!("csv encoding: {e}"));
    w.write_record(CSV_HEADER).map_err(to_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::NumericalFailure(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

/// Write `text` to `path` through a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("output path {} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(text.as_bytes())?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Write rows (header only when empty) to `path` atomically.
pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_atomic(path, &render_csv(&[], rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(obs: &str) -> ResultRow {
        ResultRow {
            experiment: "x".into(),
            n: Some(3),
            beta: Some(0.5),
            replica: None,
            observable: obs.into(),
            value: 1.25,
            stderr: 0.0,
            wall_ms: 0,
            seed: 9,
        }
    }

    #[test]
    fn rendering() {
        assert_eq!(
            render_csv(&[], &[]).unwrap(),
            "experiment,n,beta,replica,observable,value,stderr,wall_ms,seed\n"
        );
        let s = render_csv(&["a=b".into()], &[row("error: a, b")]).unwrap();
        assert!(s.starts_with("# a=b\n"));
        assert!(s.ends_with("x,3,0.5,,\"error: a, b\",1.25,0,0,9\n"));
    }

    #[test]
    fn atomic_rewrite_is_identical() {
        let dir = std::env::temp_dir().join(format!("rstre-out-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("r.csv");
        write_csv(&[row("o")], &p).unwrap();
        let a = fs::read(&p).unwrap();
        write_csv(&[row("o")], &p).unwrap();
        assert_eq!(a, fs::read(&p).unwrap());
        assert!(write_csv(&[], &dir.join("missing/r.csv")).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
