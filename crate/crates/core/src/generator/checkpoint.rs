//! Plain-text checkpoint: `key value` header lines followed by named arrays.
//!
//! ```text
//! shadowgen-checkpoint
//! version 1
//! n 9
//! ...
//! array w_ih1 64 21
//! <one row per line, space-separated>
//! ...
//! end
//! ```
//!
//! Floats use the shortest representation that parses back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::rnn::{RnnParams, TENSOR_NAMES};
use super::train::TrainConfig;
use crate::engine::{CircuitLayout, DICTIONARY};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "shadowgen-checkpoint";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainConfig,
    pub params: RnnParams,
    pub updates_done: usize,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, params: RnnParams, updates_done: usize) -> Self {
        Self { version: CHECKPOINT_VERSION, config, params, updates_done }
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn layers(&self) -> usize {
        self.config.layers
    }

    /// Fail unless the checkpoint was trained for `n` qubits (and `layers`
    /// layers, when given).
    pub fn check_compatible(&self, n: usize, layers: Option<usize>) -> Result<()> {
        if self.n() != n {
            return Err(Error::Incompatible(format!("checkpoint is for {} qubits, requested {n}", self.n())));
        }
        if let Some(l) = layers {
            if l != self.layers() {
                return Err(Error::Incompatible(format!(
                    "checkpoint generates {} layers, requested {l}",
                    self.layers()
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let p = &self.params;
        let mut s = String::new();
        let dict: Vec<&str> = DICTIONARY.iter().map(|g| g.token()).collect();
        let sizes: Vec<String> = c.sizes.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "version {}", self.version);
        let _ = writeln!(s, "n {}", p.n);
        let _ = writeln!(s, "layers {}", c.layers);
        let _ = writeln!(s, "hidden {}", p.hidden);
        let _ = writeln!(s, "gates_per_layer {}", p.gates_per_layer);
        let _ = writeln!(s, "dictionary {}", dict.join(","));
        let _ = writeln!(s, "updates_done {}", self.updates_done);
        let _ = writeln!(s, "seed {}", c.seed);
        let _ = writeln!(s, "samples_per_support {}", c.samples_per_support);
        let _ = writeln!(s, "supports_per_update {}", c.supports_per_update);
        let _ = writeln!(s, "updates {}", c.updates);
        let _ = writeln!(s, "lr {:?}", c.lr);
        let _ = writeln!(s, "entropy_bonus {:?}", c.entropy_bonus);
        let _ = writeln!(s, "swap_penalty {:?}", c.swap_penalty);
        let _ = writeln!(s, "supervised_period {}", c.supervised_period);
        let _ = writeln!(s, "supervised_epochs {}", c.supervised_epochs);
        let _ = writeln!(s, "replay_capacity {}", c.replay_capacity);
        let _ = writeln!(s, "sizes {}", sizes.join(","));
        for ((name, data), (rows, cols)) in TENSOR_NAMES.iter().zip(p.tensors()).zip(p.shapes()) {
            let _ = writeln!(s, "array {name} {rows} {cols}");
            for row in data.chunks(cols) {
                let vals: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                let _ = writeln!(s, "{}", vals.join(" "));
            }
        }
        let _ = writeln!(s, "end");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (ln, magic) = lines.next_line()?;
        if magic.trim() != MAGIC {
            return Err(lines.error(ln, "missing checkpoint header"));
        }
        let version: u32 = lines.field("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version { found: version, expected: CHECKPOINT_VERSION });
        }
        let n: usize = lines.field("n")?;
        let layers: usize = lines.field("layers")?;
        let hidden: usize = lines.field("hidden")?;
        let gates_per_layer: usize = lines.field("gates_per_layer")?;
        let dict: String = lines.field("dictionary")?;
        let expected: Vec<&str> = DICTIONARY.iter().map(|g| g.token()).collect();
        if dict != expected.join(",") {
            return Err(Error::Incompatible(format!(
                "checkpoint dictionary {dict:?} differs from {:?}",
                expected.join(",")
            )));
        }
        let updates_done = lines.field("updates_done")?;
        let seed = lines.field("seed")?;
        let samples_per_support = lines.field("samples_per_support")?;
        let supports_per_update = lines.field("supports_per_update")?;
        let updates = lines.field("updates")?;
        let lr = lines.field("lr")?;
        let entropy_bonus = lines.field("entropy_bonus")?;
        let swap_penalty = lines.field("swap_penalty")?;
        let supervised_period = lines.field("supervised_period")?;
        let supervised_epochs = lines.field("supervised_epochs")?;
        let replay_capacity = lines.field("replay_capacity")?;
        let (sizes_line, sizes_raw): (usize, String) = lines.field_at("sizes")?;
        let sizes = sizes_raw
            .split(',')
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| lines.error(sizes_line, &format!("bad sizes list: {e}")))?;

        let layout = CircuitLayout::new(n).map_err(|e| Error::Incompatible(e.to_string()))?;
        if gates_per_layer != layout.max_gates() {
            return Err(Error::Incompatible(format!(
                "{gates_per_layer} gates per layer does not match a {n}-qubit brick wall"
            )));
        }
        let mut params = RnnParams::zeros(n, gates_per_layer, hidden);
        let shapes = params.shapes();
        for ((name, dest), (rows, cols)) in TENSOR_NAMES.iter().zip(params.tensors_mut()).zip(shapes) {
            let (ln, header) = lines.next_line()?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "array" || parts[1] != *name {
                return Err(lines.error(ln, &format!("expected `array {name} {rows} {cols}`")));
            }
            if parts[2].parse::<usize>().ok() != Some(rows) || parts[3].parse::<usize>().ok() != Some(cols) {
                return Err(lines.error(ln, &format!("array {name} should be {rows}x{cols}")));
            }
            for r in 0..rows {
                let (ln, row) = lines.next_line()?;
                let vals: Vec<f64> = row
                    .split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| lines.error(ln, &format!("bad number: {e}")))?;
                if vals.len() != cols {
                    return Err(lines.error(ln, &format!("expected {cols} values, found {}", vals.len())));
                }
                dest[r * cols..(r + 1) * cols].copy_from_slice(&vals);
            }
        }
        let (ln, end) = lines.next_line()?;
        if end.trim() != "end" {
            return Err(lines.error(ln, "expected `end`"));
        }
        let config = TrainConfig {
            n,
            layers,
            hidden,
            samples_per_support,
            supports_per_update,
            updates,
            lr,
            entropy_bonus,
            swap_penalty,
            supervised_period,
            supervised_epochs,
            replay_capacity,
            sizes,
            seed,
        };
        Ok(Self { version, config, params, updates_done })
    }
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut offset = 0;
        let lines = text
            .split_inclusive('\n')
            .map(|l| {
                let start = offset;
                offset += l.len();
                (start, l.trim_end_matches(['\n', '\r']))
            })
            .collect();
        Self { lines, pos: 0 }
    }

    fn error(&self, line: usize, msg: &str) -> Error {
        let offset = self.lines.get(line).map_or_else(|| self.lines.last().map_or(0, |l| l.0 + l.1.len()), |l| l.0);
        Error::Parse { line: line + 1, offset, msg: msg.to_string() }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        let idx = self.pos;
        match self.lines.get(idx) {
            Some(&(_, l)) => {
                self.pos += 1;
                Ok((idx, l))
            }
            None => Err(self.error(idx, "unexpected end of file")),
        }
    }

    fn field_at<T: std::str::FromStr>(&mut self, key: &str) -> Result<(usize, T)>
    where
        T::Err: std::fmt::Display,
    {
        let (ln, line) = self.next_line()?;
        let (k, v) = line.split_once(' ').ok_or_else(|| self.error(ln, &format!("expected `{key} <value>`")))?;
        if k != key {
            return Err(self.error(ln, &format!("expected field `{key}`, found `{k}`")));
        }
        let v = v.trim().parse::<T>().map_err(|e| self.error(ln, &format!("bad value for {key}: {e}")))?;
        Ok((ln, v))
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.field_at(key)?.1)
    }
}

/// Write atomically via a sibling temporary file.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_atomic(path, ckpt.to_text().as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_text(&fs::read_to_string(path)?)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let cfg = TrainConfig { n: 5, layers: 3, hidden: 4, sizes: vec![2, 3], ..TrainConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = RnnParams::random(5, 2, 4, &mut rng);
        Checkpoint::new(cfg, params, 17)
    }

    #[test]
    fn text_round_trip_is_exact() {
        let c = sample();
        let text = c.to_text();
        let back = Checkpoint::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn wrong_version() {
        let text = sample().to_text().replace("version 1\n", "version 7\n");
        assert!(matches!(Checkpoint::from_text(&text), Err(Error::Version { found: 7, .. })));
    }

    #[test]
    fn corrupt_number_reports_location() {
        let text = sample().to_text();
        let pos = text.find("array w_hh1").unwrap();
        let line_start = text[pos..].find('\n').unwrap() + pos + 1;
        let mut broken = text.clone();
        broken.replace_range(line_start..line_start + 1, "x");
        match Checkpoint::from_text(&broken) {
            Err(Error::Parse { offset, line, .. }) => {
                assert_eq!(offset, line_start);
                assert_eq!(line, text[..line_start].matches('\n').count() + 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file() {
        let text = sample().to_text();
        let cut = &text[..text.len() / 2];
        assert!(matches!(Checkpoint::from_text(cut), Err(Error::Parse { .. })));
    }

    #[test]
    fn dictionary_mismatch() {
        let text = sample().to_text().replace("dictionary I,S,iS", "dictionary I,S,iS,CZ");
        assert!(matches!(Checkpoint::from_text(&text), Err(Error::Incompatible(_))));
    }

    #[test]
    fn compatibility() {
        let c = sample();
        assert!(c.check_compatible(5, Some(3)).is_ok());
        assert!(matches!(c.check_compatible(9, None), Err(Error::Incompatible(_))));
        assert!(matches!(c.check_compatible(5, Some(8)), Err(Error::Incompatible(_))));
    }
}
