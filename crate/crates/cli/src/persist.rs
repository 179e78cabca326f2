//! Text weight files.
//!
//! A network block is
//!
//! ```text
//! net
//! activation sigmoid
//! dims 10 3 2
//! params 41
//! 1.2345678901234567e-1
//! ...
//! ```
//!
//! with one parameter per line in the canonical flattening order (per layer:
//! weights node-major, then thresholds), written with 17 significant digits.
//! A network file starts with `repnet-net 1` followed by one block; a
//! multi-task file starts with `repnet-multitask 1`, then `heads K`, then the
//! trunk block and `K` head blocks.

use crate::CliError;
use repnet::nnet::{Activation, Network};
use repnet::replearn::MultiTaskNet;
use std::fmt::Write as _;
use std::path::Path;

const NET_MAGIC: &str = "repnet-net 1";
const MULTI_MAGIC: &str = "repnet-multitask 1";

fn write_block(s: &mut String, net: &Network) {
    let dims: Vec<String> = net.dims().iter().map(usize::to_string).collect();
    let params = net.params();
    let _ = writeln!(s, "net\nactivation {}\ndims {}\nparams {}", net.activation().name(), dims.join(" "), params.len());
    for p in params {
        let _ = writeln!(s, "{p:.16e}");
    }
}

pub fn net_to_string(net: &Network) -> String {
    let mut s = format!("{NET_MAGIC}\n");
    write_block(&mut s, net);
    s
}

pub fn multitask_to_string(mt: &MultiTaskNet) -> String {
    let mut s = format!("{MULTI_MAGIC}\nheads {}\n", mt.heads().len());
    write_block(&mut s, mt.trunk());
    for h in mt.heads() {
        write_block(&mut s, h);
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> CliError {
        CliError::Parse {
            line: self.last,
            msg: msg.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, CliError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l.trim())
            }
            None => {
                self.last += 1;
                Err(self.err(format!("unexpected end of file, expected {what}")))
            }
        }
    }

    /// Reads `key rest` and returns `rest`.
    fn field(&mut self, key: &str) -> Result<&'a str, CliError> {
        let l = self.next(key)?;
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ => Err(self.err(format!("expected {key:?}, got {l:?}"))),
        }
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T, CliError> {
        s.parse().map_err(|_| self.err(format!("bad number {s:?}")))
    }

    fn finish(&mut self) -> Result<(), CliError> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                self.last = i + 1;
                return Err(self.err("trailing content"));
            }
        }
        Ok(())
    }
}

fn read_block(lines: &mut Lines<'_>) -> Result<Network, CliError> {
    let l = lines.next("net")?;
    if l != "net" {
        return Err(lines.err(format!("expected \"net\", got {l:?}")));
    }
    let act = lines.field("activation")?;
    let activation = Activation::from_name(act).ok_or_else(|| lines.err(format!("unknown activation {act:?}")))?;
    let dims = lines
        .field("dims")?
        .split_whitespace()
        .map(|d| lines.number::<usize>(d))
        .collect::<Result<Vec<_>, _>>()?;
    let template = Network::zeros(&dims, activation).map_err(|e| lines.err(e.to_string()))?;
    let field = lines.field("params")?;
    let count: usize = lines.number(field)?;
    if count != template.num_params() {
        return Err(lines.err(format!("dims imply {} parameters, header says {count}", template.num_params())));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let l = lines.next("parameter")?;
        let v: f64 = lines.number(l)?;
        if !v.is_finite() {
            return Err(lines.err("non-finite parameter"));
        }
        params.push(v);
    }
    template.with_params(&params).map_err(|e| lines.err(e.to_string()))
}

fn expect_magic(lines: &mut Lines<'_>, magic: &str) -> Result<(), CliError> {
    let l = lines.next(magic)?;
    if l != magic {
        return Err(lines.err(format!("expected {magic:?}, got {l:?}")));
    }
    Ok(())
}

pub fn net_from_str(text: &str) -> Result<Network, CliError> {
    let mut lines = Lines::new(text);
    expect_magic(&mut lines, NET_MAGIC)?;
    let net = read_block(&mut lines)?;
    lines.finish()?;
    Ok(net)
}

pub fn multitask_from_str(text: &str) -> Result<MultiTaskNet, CliError> {
    let mut lines = Lines::new(text);
    expect_magic(&mut lines, MULTI_MAGIC)?;
    let field = lines.field("heads")?;
    let k: usize = lines.number(field)?;
    let trunk = read_block(&mut lines)?;
    let heads = (0..k).map(|_| read_block(&mut lines)).collect::<Result<Vec<_>, _>>()?;
    lines.finish()?;
    MultiTaskNet::new(trunk, heads).map_err(|e| lines.err(e.to_string()))
}

pub fn save_net(path: &Path, net: &Network) -> Result<(), CliError> {
    Ok(std::fs::write(path, net_to_string(net))?)
}

pub fn load_net(path: &Path) -> Result<Network, CliError> {
    net_from_str(&std::fs::read_to_string(path)?)
}

pub fn save_multitask(path: &Path, mt: &MultiTaskNet) -> Result<(), CliError> {
    Ok(std::fs::write(path, multitask_to_string(mt))?)
}

pub fn load_multitask(path: &Path) -> Result<MultiTaskNet, CliError> {
    multitask_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use repnet::replearn::Architecture;
    use repnet::rng;

    fn random_net(seed: u64) -> Network {
        Network::random(&[4, 3, 2], Activation::Sigmoid, -2.0, 2.0, &mut rng::stream(seed)).unwrap()
    }

    #[test]
    fn net_round_trip_is_exact() {
        let net = random_net(1);
        let back = net_from_str(&net_to_string(&net)).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn multitask_round_trip() {
        let mt = MultiTaskNet::random(&Architecture::translation(), 3, (-1.0, 1.0), &mut rng::stream(2)).unwrap();
        let back = multitask_from_str(&multitask_to_string(&mt)).unwrap();
        assert_eq!(back.params(), mt.params());
        assert_eq!(back.heads().len(), 3);
    }

    #[test]
    fn truncated_reports_line() {
        let text = net_to_string(&random_net(3));
        let cut: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        match net_from_str(&cut) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dims_mismatch_rejected() {
        let text = net_to_string(&random_net(4)).replace("dims 4 3 2", "dims 4 3 3");
        match net_from_str(&text) {
            Err(CliError::Parse { line, msg }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("parameters"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn garbage_rejected() {
        assert!(net_from_str("").is_err());
        assert!(net_from_str("repnet-net 1\nnet\nactivation relu\n").is_err());
        let mut text = net_to_string(&random_net(5));
        text.push_str("1.0\n");
        assert!(matches!(net_from_str(&text), Err(CliError::Parse { .. })));
    }
}
