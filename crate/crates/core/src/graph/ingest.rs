use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SocialNetwork;
use crate::error::{Error, Result};

/// Normalization applied while reading an edge list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Add `(v, u)` for every `(u, v)`.
    pub symmetrize: bool,
    /// Keep the first occurrence of a repeated edge instead of failing.
    pub dedupe: bool,
    /// Drop `(u, u)` instead of failing.
    pub drop_self_loops: bool,
    /// Map raw ids to `0..n` in ascending raw-id order. Without it raw ids
    /// are used as indices and `n = max id + 1`.
    pub relabel: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            symmetrize: false,
            dedupe: true,
            drop_self_loops: true,
            relabel: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines_read: usize,
    pub edges_read: usize,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
    pub reverse_edges_added: usize,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub network: SocialNetwork,
    /// `labels[i]` is the raw id of dense node `i`.
    pub labels: Vec<u64>,
    pub report: IngestReport,
}

pub fn ingest_edge_list(path: impl AsRef<Path>, options: IngestOptions) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_edge_list(BufReader::new(file), path, options)
}

/// Parses `src dst[ prob]` lines; `#` starts a comment line.
///
/// `origin` is only used in error messages.
pub fn parse_edge_list<R: BufRead>(
    reader: R,
    origin: &Path,
    options: IngestOptions,
) -> Result<Ingested> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };

    let mut raw: Vec<(u64, u64, Option<f64>)> = Vec::new();
    let mut report = IngestReport::default();
    let mut weighted: Option<bool> = None;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        report.lines_read += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected `src dst [prob]`, got {} fields", fields.len()),
            ));
        }
        let id = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| parse_err(lineno, format!("bad node id `{s}`")))
        };
        let (src, dst) = (id(fields[0])?, id(fields[1])?);
        let prob = match fields.get(2) {
            Some(s) => {
                let p = s
                    .parse::<f64>()
                    .map_err(|_| parse_err(lineno, format!("bad probability `{s}`")))?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(parse_err(lineno, format!("probability {p} outside (0, 1]")));
                }
                Some(p)
            }
            None => None,
        };
        match weighted {
            None => weighted = Some(prob.is_some()),
            Some(w) if w != prob.is_some() => {
                return Err(parse_err(
                    lineno,
                    "mixes weighted and unweighted lines".into(),
                ));
            }
            _ => {}
        }
        report.edges_read += 1;
        raw.push((src, dst, prob));
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let labels: Vec<u64> = if options.relabel {
        raw.iter()
            .flat_map(|&(s, t, _)| [s, t])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        let max = raw.iter().map(|&(s, t, _)| s.max(t)).max().unwrap_or(0);
        if max >= u64::from(u32::MAX) {
            return Err(Error::InvalidGraph(format!(
                "raw id {max} too large without relabeling"
            )));
        }
        (0..=max).collect()
    };
    let index: HashMap<u64, u32> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i as u32))
        .collect();

    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(raw.len() * 2);
    let mut edges: Vec<(u32, u32, Option<f64>)> = Vec::with_capacity(raw.len());
    let mut push = |s: u32,
                    t: u32,
                    p: Option<f64>,
                    edges: &mut Vec<_>,
                    report: &mut IngestReport|
     -> Result<bool> {
        if seen.insert((s, t)) {
            edges.push((s, t, p));
            Ok(true)
        } else if options.dedupe {
            report.duplicates_dropped += 1;
            Ok(false)
        } else {
            Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                labels[s as usize], labels[t as usize]
            )))
        }
    };

    for &(s, t, p) in &raw {
        let (s, t) = (index[&s], index[&t]);
        if s == t {
            if options.drop_self_loops {
                report.self_loops_dropped += 1;
                continue;
            }
            return Err(Error::InvalidGraph(format!(
                "self-loop on node {}",
                labels[s as usize]
            )));
        }
        push(s, t, p, &mut edges, &mut report)?;
    }
    if options.symmetrize {
        let forward: Vec<_> = edges.clone();
        for (s, t, p) in forward {
            if !seen.contains(&(t, s)) {
                seen.insert((t, s));
                edges.push((t, s, p));
                report.reverse_edges_added += 1;
            }
        }
    }

    let n = labels.len();
    let network = if weighted == Some(true) {
        SocialNetwork::from_weighted_edges(
            n,
            edges.iter().map(|&(s, t, p)| (s, t, p.unwrap_or(1.0))),
        )?
    } else {
        SocialNetwork::from_edges(n, edges.iter().map(|&(s, t, _)| (s, t)))?
    };
    Ok(Ingested {
        network,
        labels,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;

    fn parse(text: &str, options: IngestOptions) -> Result<Ingested> {
        parse_edge_list(text.as_bytes(), Path::new("<test>"), options)
    }

    #[test]
    fn plain_chain() {
        let g = parse("0 1\n1 2", IngestOptions::default()).unwrap();
        assert_eq!(g.network.node_count(), 3);
        assert_eq!(g.network.edge_count(), 2);
        assert!(!g.network.is_weighted());
    }

    #[test]
    fn symmetrize_adds_reverse() {
        let opts = IngestOptions {
            symmetrize: true,
            ..Default::default()
        };
        let g = parse("0 1", opts).unwrap();
        let pairs: Vec<_> = g
            .network
            .edges()
            .iter()
            .map(|e| (e.source.0, e.target.0))
            .collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(g.report.reverse_edges_added, 1);
    }

    #[test]
    fn symmetrize_skips_existing_reverse() {
        let opts = IngestOptions {
            symmetrize: true,
            ..Default::default()
        };
        let g = parse("0 1\n1 0\n1 2", opts).unwrap();
        assert_eq!(g.network.edge_count(), 4);
    }

    #[test]
    fn self_loops_dropped_and_counted() {
        let g = parse("0 0\n0 1", IngestOptions::default()).unwrap();
        assert_eq!(g.network.edge_count(), 1);
        assert_eq!(g.report.self_loops_dropped, 1);
        let strict = IngestOptions {
            drop_self_loops: false,
            ..Default::default()
        };
        assert!(parse("0 0\n0 1", strict).is_err());
    }

    #[test]
    fn duplicates_keep_first() {
        let g = parse("0 1 0.5\n0 1 0.2\n", IngestOptions::default()).unwrap();
        assert_eq!(g.network.edge_count(), 1);
        assert_eq!(g.network.prob(0), 0.5);
        assert_eq!(g.report.duplicates_dropped, 1);
        let strict = IngestOptions {
            dedupe: false,
            ..Default::default()
        };
        assert!(parse("0 1\n0 1", strict).is_err());
    }

    #[test]
    fn comments_and_probabilities() {
        let g = parse("# header\n\n5 9 0.25\n9 7 1\n", IngestOptions::default()).unwrap();
        assert_eq!(g.labels, vec![5, 7, 9]);
        assert_eq!(g.network.find_edge(NodeId(0), NodeId(2)), Some(0));
        assert_eq!(g.network.prob(0), 0.25);
        assert_eq!(g.network.prob(1), 1.0);
    }

    #[test]
    fn no_relabel_uses_raw_ids() {
        let opts = IngestOptions {
            relabel: false,
            ..Default::default()
        };
        let g = parse("0 4", opts).unwrap();
        assert_eq!(g.network.node_count(), 5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("0 1\n0 x\n", IngestOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse("0 1\n1 2 3 4\n", IngestOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("0 1 1.5", IngestOptions::default()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("0 1 0", IngestOptions::default()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse("0 1 0.5\n1 2", IngestOptions::default()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("# nothing\n", IngestOptions::default()),
            Err(Error::EmptyGraph)
        ));
    }
}
