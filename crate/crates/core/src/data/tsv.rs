//! Delimited click-log ingest: label column first, then one column per field,
//! no header. Blank lines are ignored. Rows with the wrong column count or an
//! unparseable continuous value are skipped and counted; a label outside
//! `{0, 1}` aborts with the line number.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::data::{Example, ExampleBatch, FieldSchema};
use crate::error::{Error, Result};

pub struct TsvReader<R> {
    reader: R,
    schema: FieldSchema,
    delimiter: char,
    line_no: usize,
    skipped: usize,
    buf: String,
}

impl<R: BufRead> TsvReader<R> {
    pub fn new(reader: R, schema: FieldSchema, delimiter: char) -> Self {
        Self {
            reader,
            schema,
            delimiter,
            line_no: 0,
            skipped: 0,
            buf: String::new(),
        }
    }

    /// Malformed rows seen so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn lines_read(&self) -> usize {
        self.line_no
    }

    fn parse_line(&mut self) -> Option<Result<Example>> {
        let line = self.buf.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            return None;
        }
        let mut cols = line.split(self.delimiter);
        let label = cols.next().unwrap_or("").trim();
        let tokens: Vec<&str> = cols.collect();
        if tokens.len() != self.schema.len() {
            self.skipped += 1;
            return None;
        }
        let label = match label {
            "0" => 0,
            "1" => 1,
            other => {
                return Some(Err(Error::Parse {
                    line: self.line_no,
                    message: format!("label must be 0 or 1, got {other:?}"),
                }))
            }
        };
        match self.schema.encode(label, &tokens) {
            Some(e) => Some(Ok(e)),
            None => {
                self.skipped += 1;
                None
            }
        }
    }
}

impl<R: BufRead> Iterator for TsvReader<R> {
    type Item = Result<Example>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    self.line_no += 1;
                    if let Some(item) = self.parse_line() {
                        return Some(item);
                    }
                }
                Err(e) => {
                    return Some(Err(Error::Parse {
                        line: self.line_no + 1,
                        message: e.to_string(),
                    }))
                }
            }
        }
    }
}

pub fn open_tsv(
    path: impl AsRef<Path>,
    schema: &FieldSchema,
    delimiter: char,
) -> Result<TsvReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(TsvReader::new(BufReader::new(file), schema.clone(), delimiter))
}

#[derive(Debug, Clone)]
pub struct LoadedTsv {
    pub data: ExampleBatch,
    pub skipped: usize,
    pub lines: usize,
}

pub fn load_tsv(path: impl AsRef<Path>, schema: &FieldSchema, delimiter: char) -> Result<LoadedTsv> {
    let mut reader = open_tsv(path, schema, delimiter)?;
    let mut data = ExampleBatch::new(schema.len());
    for ex in reader.by_ref() {
        data.push(&ex?)?;
    }
    Ok(LoadedTsv {
        data,
        skipped: reader.skipped(),
        lines: reader.lines_read(),
    })
}

/// Column count of the first non-blank line, label included.
pub fn count_columns(path: impl AsRef<Path>, delimiter: char) -> Result<Option<usize>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if !line.trim().is_empty() {
            return Ok(Some(line.split(delimiter).count()));
        }
    }
    Ok(None)
}
