//! JSON-lines path dumps: a header line, then one line per step.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::GeodesicResult;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathDumpHeader {
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "T_n")]
    pub passage_time: f64,
    pub max_jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathDumpStep {
    pub k: usize,
    pub x: Vec<f64>,
    pub jump: f64,
}

pub fn write_path_dump<W: Write>(result: &GeodesicResult, seed: u64, mut out: W) -> Result<()> {
    let path = result.path();
    let header = PathDumpHeader {
        alpha: path.alpha,
        n: path.steps.len(),
        seed,
        passage_time: result.passage_time(),
        max_jump: result.max_jump(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for (j, (p, &jump)) in path.steps.iter().zip(result.jumps()).enumerate() {
        let step = PathDumpStep {
            k: path.start.t + j + 1,
            x: p.coords().to_vec(),
            jump,
        };
        serde_json::to_writer(&mut out, &step)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_path_dump<R: BufRead>(input: R) -> Result<(PathDumpHeader, Vec<PathDumpStep>)> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => serde_json::from_str(&line?)?,
        None => return Err(Error::Format("empty path dump".into())),
    };
    let steps = lines
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::deterministic_environment;
    use crate::geodesic::{geodesic_to_hyperplane, JumpConstraint};

    #[test]
    fn dump_round_trip() {
        let env = deterministic_environment(1, vec![vec![vec![3.0]], vec![vec![-1.0]]]).unwrap();
        let r = geodesic_to_hyperplane(&env, 2.0, JumpConstraint::Unbounded)
            .unwrap()
            .reached()
            .unwrap();
        let mut buf = Vec::new();
        write_path_dump(&r, 5, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "{\"alpha\":2.0,\"n\":2,\"seed\":5,\"T_n\":25.0,\"max_jump\":4.0}\n\
             {\"k\":1,\"x\":[3.0],\"jump\":3.0}\n\
             {\"k\":2,\"x\":[-1.0],\"jump\":4.0}\n"
        );
        let (h, steps) = read_path_dump(&buf[..]).unwrap();
        assert_eq!(h.max_jump, 4.0);
        assert_eq!(steps.len(), 2);
    }
}
