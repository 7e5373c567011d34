use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NodeEconomics, SocialNetwork};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Weighting scheme that produced the probabilities, e.g. `"trivalency"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    /// Raw ids of the dense nodes, when the graph was relabeled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u64>>,
}

/// A network together with its economics: the unit every experiment runs on.
#[derive(Clone, Debug)]
pub struct Instance {
    pub network: SocialNetwork,
    pub economics: NodeEconomics,
    pub meta: InstanceMeta,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    n: usize,
    edges: Vec<(u32, u32, Option<f64>)>,
    cost: Vec<f64>,
    benefit: Vec<f64>,
    #[serde(default)]
    meta: InstanceMeta,
}

impl Instance {
    pub fn new(
        network: SocialNetwork,
        economics: NodeEconomics,
        meta: InstanceMeta,
    ) -> Result<Self> {
        economics.check_against(&network)?;
        Ok(Instance {
            network,
            economics,
            meta,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        Self::from_doc(serde_json::from_reader(reader)?)
    }

    fn from_doc(doc: InstanceDoc) -> Result<Self> {
        let weighted = doc.edges.iter().filter(|e| e.2.is_some()).count();
        let network = if weighted == 0 {
            SocialNetwork::from_edges(doc.n, doc.edges.iter().map(|&(s, t, _)| (s, t)))?
        } else if weighted == doc.edges.len() {
            SocialNetwork::from_weighted_edges(
                doc.n,
                doc.edges.iter().map(|&(s, t, p)| (s, t, p.unwrap_or(0.0))),
            )?
        } else {
            return Err(Error::InvalidGraph(
                "some edges have probabilities and some do not".into(),
            ));
        };
        Self::new(
            network,
            NodeEconomics::new(doc.cost, doc.benefit)?,
            doc.meta,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_doc())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &self.to_doc())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn to_doc(&self) -> InstanceDoc {
        let probs = self.network.probabilities();
        InstanceDoc {
            n: self.network.node_count(),
            edges: self
                .network
                .edges()
                .iter()
                .enumerate()
                .map(|(i, e)| (e.source.0, e.target.0, probs.map(|p| p[i])))
                .collect(),
            cost: self.economics.costs().to_vec(),
            benefit: self.economics.benefits().to_vec(),
            meta: self.meta.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let g = SocialNetwork::from_weighted_edges(3, [(0, 1, 0.1), (1, 2, 0.01)]).unwrap();
        let e = NodeEconomics::new(vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]).unwrap();
        let meta = InstanceMeta {
            seed: Some(7),
            scheme: Some("trivalency".into()),
            ..Default::default()
        };
        let inst = Instance::new(g, e, meta).unwrap();
        let text = inst.to_json().unwrap();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back.network.probabilities(), inst.network.probabilities());
        assert_eq!(back.economics, inst.economics);
        assert_eq!(back.meta, inst.meta);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn null_probabilities_mean_unweighted() {
        let text = r#"{"n":2,"edges":[[0,1,null]],"cost":[1,1],"benefit":[0,0]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert!(!inst.network.is_weighted());
    }

    #[test]
    fn length_mismatch_rejected() {
        let text = r#"{"n":3,"edges":[[0,1,0.5]],"cost":[1,1],"benefit":[0,0]}"#;
        assert!(Instance::from_json(text).is_err());
    }
}
