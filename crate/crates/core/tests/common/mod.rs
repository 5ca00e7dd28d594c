//! Shared fixtures for the integration tests.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use fibinet::numeric::Rng;

/// Criteo-format click log: label, 13 integer columns, 26 hashed categorical
/// columns, tab-separated. Integers are sometimes missing or negative and
/// categoricals sometimes empty, as in the public logs. The label depends on
/// two categorical columns so that training has something to find.
pub fn criteo_rows(rows: usize, seed: u64) -> Vec<String> {
    let mut rng = Rng::new(seed);
    let vocab: Vec<Vec<String>> = (0..26)
        .map(|c| {
            let size = 5 + 40 * (c % 4);
            (0..size).map(|_| format!("{:08x}", rng.next_u64() as u32)).collect()
        })
        .collect();
    (0..rows)
        .map(|_| {
            let mut line = String::new();
            let ints: Vec<String> = (0..13)
                .map(|_| {
                    let u = rng.next_f64();
                    if u < 0.15 {
                        String::new()
                    } else if u < 0.18 {
                        format!("-{}", rng.below(3) + 1)
                    } else {
                        let magnitude = 1 << rng.below(12);
                        rng.below(magnitude).to_string()
                    }
                })
                .collect();
            let cats: Vec<usize> = vocab.iter().map(|v| rng.below(v.len() as u64) as usize).collect();
            let signal: f64 = if cats[0].is_multiple_of(2) == cats[1].is_multiple_of(3) { 1.5 } else { -1.5 };
            let label = rng.bernoulli(1.0 / (1.0 + (-signal).exp()));
            write!(line, "{}", label as u8).unwrap();
            for i in &ints {
                write!(line, "\t{i}").unwrap();
            }
            for (c, &v) in cats.iter().enumerate() {
                if rng.next_f64() < 0.05 {
                    line.push('\t');
                } else {
                    write!(line, "\t{}", vocab[c][v]).unwrap();
                }
            }
            line
        })
        .collect()
}

pub fn write_lines(path: &Path, lines: &[String]) {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).unwrap();
}
