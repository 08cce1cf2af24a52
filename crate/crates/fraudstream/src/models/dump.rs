//! Versioned text dump of trained forests, for debugging and for shipping
//! small models between runs. Floats use Rust's shortest round-trip
//! formatting, so load(save(f)) reproduces scores bit-for-bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{BalancedForest, DecisionTree, ModelError, Node};

const MAGIC: &str = "fraudstream-forest v1";

pub fn save_forest(forest: &BalancedForest, path: &Path) -> Result<(), ModelError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "n_features {}", forest.n_features)?;
    writeln!(w, "trees {}", forest.trees.len())?;
    for (i, tree) in forest.trees.iter().enumerate() {
        let (fraud, genuine) = forest.bag_class_counts[i];
        writeln!(w, "tree {i} nodes {} bag {fraud} {genuine}", tree.nodes.len())?;
        for node in &tree.nodes {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => writeln!(w, "s {feature} {threshold} {left} {right}")?,
                Node::Leaf { score } => writeln!(w, "l {score}")?,
            }
        }
    }
    writeln!(w, "end")?;
    w.flush()?;
    Ok(())
}

pub fn load_forest(path: &Path) -> Result<BalancedForest, ModelError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let bad = |msg: &str| ModelError::MalformedDump(msg.to_string());
    let mut next_line = move || -> Result<String, ModelError> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))?
            .map_err(ModelError::from)
    };

    if next_line()? != MAGIC {
        return Err(bad("unknown magic/version line"));
    }
    let n_features = parse_kv(&next_line()?, "n_features")? as usize;
    let n_trees = parse_kv(&next_line()?, "trees")? as usize;

    let mut trees = Vec::with_capacity(n_trees);
    let mut bags = Vec::with_capacity(n_trees);
    for i in 0..n_trees {
        let header = next_line()?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 7 || parts[0] != "tree" || parts[2] != "nodes" || parts[4] != "bag" {
            return Err(bad(&format!("malformed tree header: '{header}'")));
        }
        let index: usize = parts[1].parse().map_err(|_| bad("bad tree index"))?;
        if index != i {
            return Err(bad(&format!("tree {index} out of order, expected {i}")));
        }
        let n_nodes: usize = parts[3].parse().map_err(|_| bad("bad node count"))?;
        let fraud: usize = parts[5].parse().map_err(|_| bad("bad bag count"))?;
        let genuine: usize = parts[6].parse().map_err(|_| bad("bad bag count"))?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let line = next_line()?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let node = match fields.as_slice() {
                ["s", feature, threshold, left, right] => Node::Split {
                    feature: feature.parse().map_err(|_| bad("bad split feature"))?,
                    threshold: threshold.parse().map_err(|_| bad("bad split threshold"))?,
                    left: left.parse().map_err(|_| bad("bad split child"))?,
                    right: right.parse().map_err(|_| bad("bad split child"))?,
                },
                ["l", score] => Node::Leaf {
                    score: score.parse().map_err(|_| bad("bad leaf score"))?,
                },
                _ => return Err(bad(&format!("malformed node line: '{line}'"))),
            };
            nodes.push(node);
        }
        for node in &nodes {
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = node
            {
                if *feature as usize >= n_features
                    || *left as usize >= nodes.len()
                    || *right as usize >= nodes.len()
                {
                    return Err(bad("node reference out of range"));
                }
            }
        }
        trees.push(DecisionTree::from_parts(nodes, n_features));
        bags.push((fraud, genuine));
    }
    if next_line()? != "end" {
        return Err(bad("missing end marker"));
    }
    Ok(BalancedForest::from_parts(trees, bags, n_features))
}

fn parse_kv(line: &str, key: &str) -> Result<u64, ModelError> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(ModelError::MalformedDump(format!(
            "expected '{key} <value>', found '{line}'"
        )));
    }
    let v = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ModelError::MalformedDump(format!("bad value in '{line}'")))?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::super::{train_balanced_forest, ForestConfig, LabeledSample, Scorer};
    use super::*;
    use crate::stream::Class;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_scores_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<LabeledSample> = (0..300)
            .map(|_| {
                let x: f64 = rng.gen::<f64>() * 4.0;
                let y: f64 = rng.gen::<f64>() * 4.0;
                LabeledSample::new(
                    vec![x, y],
                    if x + y > 5.0 {
                        Class::Fraud
                    } else {
                        Class::Genuine
                    },
                )
            })
            .collect();
        let forest = train_balanced_forest(
            &samples,
            &ForestConfig {
                n_trees: 7,
                seed: 3,
                ..ForestConfig::default()
            },
        )
        .unwrap();
        let dir = std::env::temp_dir().join(format!("fraudstream-dump-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("forest.txt");
        save_forest(&forest, &path).unwrap();
        let loaded = load_forest(&path).unwrap();
        assert_eq!(loaded, forest);
        for s in samples.iter().step_by(17) {
            assert_eq!(
                loaded.score(&s.features).unwrap(),
                forest.score(&s.features).unwrap()
            );
        }
    }

    #[test]
    fn corrupted_dumps_are_rejected() {
        let dir = std::env::temp_dir().join(format!("fraudstream-dump-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.txt");
        std::fs::write(&path, "not-a-forest v9\n").unwrap();
        assert!(matches!(
            load_forest(&path),
            Err(ModelError::MalformedDump(_))
        ));
        std::fs::write(
            &path,
            "fraudstream-forest v1\nn_features 2\ntrees 1\ntree 0 nodes 1 bag 1 1\ns 0 0.5 9 9\nend\n",
        )
        .unwrap();
        assert!(load_forest(&path).is_err());
    }
}
