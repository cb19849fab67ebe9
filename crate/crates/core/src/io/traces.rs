//! CSV trace files and the JSON run summary.
//!
//! | file          | columns                              |
//! |---------------|--------------------------------------|
//! | spikes.csv    | `neuron_id,time_s`                   |
//! | membrane.csv  | `time_s,neuron_id,v_mem`             |
//! | synapse.csv   | `time_s,synapse_id,v_syn,freq_hz`    |
//! | output.csv    | `time_s,z,target`                    |
//!
//! Floats carry nine significant digits, so identical traces give identical
//! bytes.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{OutputSample, TraceSet};

pub const SPIKES_CSV: &str = "spikes.csv";
pub const MEMBRANE_CSV: &str = "membrane.csv";
pub const SYNAPSE_CSV: &str = "synapse.csv";
pub const OUTPUT_CSV: &str = "output.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// Formats `x` like C's `%.9g`.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Description of the run, echoed verbatim.
    pub config: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
    pub seed: u64,
    pub wall_clock_s: f64,
}

impl RunSummary {
    pub fn new(config: &impl Serialize, seed: u64) -> Result<Self> {
        let config = serde_json::to_value(config).map_err(|e| Error::invalid(format!("config echo: {e}")))?;
        Ok(RunSummary {
            config,
            metrics: BTreeMap::new(),
            seed,
            wall_clock_s: 0.0,
        })
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        if !value.is_finite() {
            return Err(Error::Numerical(format!("metric `{name}` is not finite ({value})")));
        }
        self.metrics.insert(name, value);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(SUMMARY_JSON);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::invalid(format!("summary: {e}")))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = CsvFile {
            writer: csv::Writer::from_writer(BufWriter::new(file)),
            path,
        };
        out.row(header)?;
        Ok(out)
    }

    fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| csv_error(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Writes the four CSV files into `dir`, creating it if needed. Analog
/// files are header-only when the corresponding series were not recorded.
pub fn write_traces(traces: &TraceSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n = traces.n_neurons;

    let mut spikes = CsvFile::create(dir, SPIKES_CSV, &["neuron_id", "time_s"])?;
    let mut all: Vec<(f64, usize)> = traces
        .spikes
        .iter()
        .enumerate()
        .flat_map(|(i, ts)| ts.iter().map(move |&t| (t, i)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (t, i) in all {
        spikes.row([i.to_string(), fmt_sig9(t)])?;
    }
    spikes.finish()?;

    let mut membrane = CsvFile::create(dir, MEMBRANE_CSV, &["time_s", "neuron_id", "v_mem"])?;
    if n > 0 && traces.v_mem.len() == traces.sample_times.len() * n {
        for (s, &t) in traces.sample_times.iter().enumerate() {
            for i in 0..n {
                membrane.row([fmt_sig9(t), i.to_string(), fmt_sig9(traces.v_mem[s * n + i])])?;
            }
        }
    }
    membrane.finish()?;

    let mut synapse = CsvFile::create(dir, SYNAPSE_CSV, &["time_s", "synapse_id", "v_syn", "freq_hz"])?;
    if n > 0 && traces.v_syn.len() == traces.sample_times.len() * n {
        for (s, &t) in traces.sample_times.iter().enumerate() {
            for i in 0..n {
                let k = s * n + i;
                synapse.row([
                    fmt_sig9(t),
                    i.to_string(),
                    fmt_sig9(traces.v_syn[k]),
                    fmt_sig9(traces.freq[k]),
                ])?;
            }
        }
    }
    synapse.finish()?;

    let mut output = CsvFile::create(dir, OUTPUT_CSV, &["time_s", "z", "target"])?;
    for o in &traces.output {
        output.row([fmt_sig9(o.time), fmt_sig9(o.z), fmt_sig9(o.target)])?;
    }
    output.finish()
}

fn read_rows(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != columns {
            return Err(Error::Parse(format!(
                "{}: row {} has {} fields, expected {columns}",
                path.display(),
                line + 2,
                record.len()
            )));
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{}: row {}: `{f}`: {e}", path.display(), line + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads an `output.csv` written by [`write_traces`].
pub fn read_output(path: &Path) -> Result<Vec<OutputSample>> {
    Ok(read_rows(path, 3)?
        .into_iter()
        .map(|r| OutputSample {
            time: r[0],
            z: r[1],
            target: r[2],
        })
        .collect())
}

/// Reads a `spikes.csv` as `(neuron_id, time_s)` pairs.
pub fn read_spikes(path: &Path) -> Result<Vec<(usize, f64)>> {
    Ok(read_rows(path, 2)?.into_iter().map(|r| (r[0] as usize, r[1])).collect())
}

/// Writes any serializable value as pretty TOML preceded by `# ` comment
/// lines.
pub fn write_toml(path: &Path, value: &impl Serialize, comments: &[String]) -> Result<()> {
    let body = toml::to_string_pretty(value).map_err(|e| Error::invalid(format!("toml: {e}")))?;
    let mut file = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for c in comments {
        writeln!(file, "# {c}").map_err(|e| Error::io(path, e))?;
    }
    if !comments.is_empty() {
        writeln!(file).map_err(|e| Error::io(path, e))?;
    }
    file.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    file.flush().map_err(|e| Error::io(path, e))
}
