//! Frame records and their CSV / JSON-lines serialization.
//!
//! CSV layout: header `frame_id,n_s,n_i,truth`, counts written with 17
//! significant digits, `truth` one of `0`, `1` or `NA`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Hypothesis;

pub const CSV_HEADER: &str = "frame_id,n_s,n_i,truth";

/// Integrated counts of the signal and idler regions in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub n_s: f64,
    pub n_i: f64,
    #[serde(with = "truth_json")]
    pub truth: Option<Hypothesis>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameSet {
    pub frames: Vec<FrameRecord>,
}

impl FrameSet {
    pub fn new(frames: Vec<FrameRecord>) -> Self {
        Self { frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn signal(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.n_s).collect()
    }

    pub fn idler(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.n_i).collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.frames.iter().all(|f| f.truth.is_some())
    }

    /// Contiguous sub-collection of frames.
    pub fn slice(&self, range: std::ops::Range<usize>) -> FrameSet {
        FrameSet::new(self.frames[range].to_vec())
    }

    /// Frames with signal and idler exchanged.
    pub fn swapped_arms(&self) -> FrameSet {
        FrameSet::new(
            self.frames
                .iter()
                .map(|f| FrameRecord {
                    n_s: f.n_i,
                    n_i: f.n_s,
                    ..*f
                })
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for f in &self.frames {
            let truth = match f.truth {
                Some(h) => h.index().to_string(),
                None => "NA".to_string(),
            };
            writeln!(w, "{},{:.16e},{:.16e},{}", f.frame_id, f.n_s, f.n_i, truth)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).transpose()?;
        match header {
            Some(h) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{CSV_HEADER}`"),
                })
            }
        }
        let mut frames = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let bad = |message: String| Error::Parse { line: lineno, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            }
            let frame_id = fields[0]
                .parse::<u64>()
                .map_err(|e| bad(format!("frame_id: {e}")))?;
            let n_s = fields[1].parse::<f64>().map_err(|e| bad(format!("n_s: {e}")))?;
            let n_i = fields[2].parse::<f64>().map_err(|e| bad(format!("n_i: {e}")))?;
            let truth = match fields[3] {
                "0" => Some(Hypothesis::Tau0),
                "1" => Some(Hypothesis::Tau1),
                "NA" => None,
                other => return Err(bad(format!("truth must be 0, 1 or NA, got `{other}`"))),
            };
            frames.push(FrameRecord {
                frame_id,
                n_s,
                n_i,
                truth,
            });
        }
        Ok(FrameSet::new(frames))
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for f in &self.frames {
            serde_json::to_writer(&mut w, f)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut frames = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: FrameRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            frames.push(f);
        }
        Ok(FrameSet::new(frames))
    }
}

/// `truth` as `0`, `1` or `null` in JSON.
mod truth_json {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::Hypothesis;

    pub fn serialize<S: Serializer>(v: &Option<Hypothesis>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(h) => s.serialize_u8(h.index() as u8),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Hypothesis>, D::Error> {
        let v: Option<u8> = Option::deserialize(d)?;
        match v {
            None => Ok(None),
            Some(i) => Hypothesis::from_index(i as usize)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("truth must be 0 or 1, got {i}"))),
        }
    }
}
