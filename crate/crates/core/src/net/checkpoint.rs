//! Versioned JSON checkpoints.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::NetError;
use super::network::SparseNetwork;

pub const CHECKPOINT_FORMAT: &str = "cogprior-net";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<N> {
    format: String,
    version: u32,
    network: N,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

pub fn write_checkpoint<W: Write>(net: &SparseNetwork, w: W) -> Result<(), NetError> {
    let env = Envelope {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        network: net,
    };
    serde_json::to_writer(w, &env).map_err(|e| NetError::Checkpoint(e.to_string()))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<SparseNetwork, NetError> {
    let mut buf = String::new();
    r.read_to_string(&mut buf).map_err(|e| NetError::Checkpoint(e.to_string()))?;
    let header: Header =
        serde_json::from_str(&buf).map_err(|e| NetError::Checkpoint(e.to_string()))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(NetError::Checkpoint(format!("unknown format {:?}", header.format)));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(NetError::Version {
            found: header.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let env: Envelope<SparseNetwork> =
        serde_json::from_str(&buf).map_err(|e| NetError::Checkpoint(e.to_string()))?;
    env.network.check()?;
    Ok(env.network)
}

pub fn save_checkpoint(net: &SparseNetwork, path: &Path) -> Result<(), NetError> {
    let io = |source| NetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_checkpoint(net, &mut w)?;
    w.flush().map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<SparseNetwork, NetError> {
    let f = File::open(path).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_checkpoint(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{NetworkConfig, Standardizer};

    #[test]
    fn round_trip_is_exact() {
        let mut net = SparseNetwork::init(&NetworkConfig::default()).unwrap();
        net.set_standardizer(Some(Standardizer {
            mean: (0..12).map(|i| i as f64 * 0.1 + 1.0 / 3.0).collect(),
            std: vec![std::f64::consts::PI; 12],
        }))
        .unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, net);
        let x: Vec<f64> = (0..36).map(|i| (i as f64).cos() * 30.0).collect();
        assert_eq!(back.predict(&x).unwrap(), net.predict(&x).unwrap());
    }

    #[test]
    fn wrong_version_is_rejected() {
        let net = SparseNetwork::init(&NetworkConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("\"version\":1", "\"version\":7", 1);
        assert!(matches!(
            read_checkpoint(text.as_bytes()),
            Err(NetError::Version { found: 7, .. })
        ));
    }
}
