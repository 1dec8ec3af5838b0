use std::path::Path;
use std::str::FromStr;

use super::{detect_kinds, Dataset, DatasetBuilder};
use crate::error::{Error, Result};

/// Which column carries the class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ClassIndex {
    #[default]
    Last,
    Index(usize),
}

impl FromStr for ClassIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("last") {
            return Ok(ClassIndex::Last);
        }
        s.parse::<usize>()
            .map(ClassIndex::Index)
            .map_err(|_| Error::config(format!("class index must be `last` or an integer, got `{s}`")))
    }
}

impl std::fmt::Display for ClassIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassIndex::Last => f.write_str("last"),
            ClassIndex::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub class_index: ClassIndex,
    pub missing_token: String,
    pub delimiter: u8,
    /// When false, columns are named `attr1..attrN` and the class `class`.
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            class_index: ClassIndex::Last,
            missing_token: "?".to_string(),
            delimiter: b',',
            has_header: true,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    parse_csv(&bytes, &name, opts)
}

pub(crate) fn parse_csv(bytes: &[u8], name: &str, opts: &CsvOptions) -> Result<Dataset> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(opts.delimiter)
        .trim(::csv::Trim::All)
        .from_reader(bytes);

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        // A trailing blank line is not a row.
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::data("empty CSV file"));
    }
    let width = records[0].1.len();
    if let Some((line, rec)) = records.iter().find(|(_, r)| r.len() != width) {
        return Err(Error::Parse {
            row: *line,
            msg: format!("expected {width} fields, found {}", rec.len()),
        });
    }
    let class_col = match opts.class_index {
        ClassIndex::Last => width - 1,
        ClassIndex::Index(i) if i < width => i,
        ClassIndex::Index(i) => {
            return Err(Error::config(format!(
                "class index {i} out of range for {width} columns"
            )))
        }
    };

    let (header, body): (Vec<String>, &[_]) = if opts.has_header {
        (records[0].1.iter().map(str::to_string).collect(), &records[1..])
    } else {
        let names = (0..width)
            .map(|c| if c == class_col { "class".to_string() } else { format!("attr{}", c + 1) })
            .collect();
        (names, &records[..])
    };
    let feature_names: Vec<&str> = header
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != class_col)
        .map(|(_, n)| n.as_str())
        .collect();

    let mut b = DatasetBuilder::new(name, feature_names, header[class_col].clone());
    let mut tokens = Vec::with_capacity(width - 1);
    for (line, rec) in body {
        tokens.clear();
        for (c, field) in rec.iter().enumerate() {
            if c != class_col {
                tokens.push((field != opts.missing_token).then_some(field));
            }
        }
        let label = &rec[class_col];
        if label == opts.missing_token {
            return Err(Error::Parse {
                row: *line,
                msg: "missing class label".into(),
            });
        }
        b.push(&tokens, label, 1.0).map_err(|e| Error::Parse {
            row: *line,
            msg: e.to_string(),
        })?;
    }
    let mut d = b.build();
    detect_kinds(&mut d);
    Ok(d)
}

/// Header row of feature names plus the class column last; `?` marks
/// missing cells. Instance weights are not representable and are dropped.
pub(crate) fn to_csv_string(d: &Dataset) -> Result<String> {
    let mut w = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let write_err = |e: ::csv::Error| Error::data(format!("CSV serialization failed: {e}"));
    let mut header: Vec<&str> = d.features.iter().map(|f| f.name.as_str()).collect();
    header.push(&d.class_name);
    w.write_record(&header).map_err(write_err)?;
    for inst in &d.instances {
        let mut row: Vec<&str> = inst
            .slots
            .iter()
            .enumerate()
            .map(|(x, &s)| d.token(x, s).unwrap_or("?"))
            .collect();
        row.push(&d.labels[inst.label as usize]);
        w.write_record(&row).map_err(write_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::data(format!("CSV serialization failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV writer emits UTF-8 from UTF-8 input"))
}
