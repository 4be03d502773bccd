//! The standard implications among positivity notions for a line bundle on
//! a projective manifold.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Ample,
    Positive,
    Semipositive,
    Nef,
    Big,
    TopologicallyTrivial,
    UnitaryFlat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImplicationRule {
    pub id: u8,
    pub from: Property,
    pub to: Property,
    /// Rule (1) is an equivalence.
    pub bidirectional: bool,
    pub citation: &'static str,
}

pub fn implication_rules() -> Vec<ImplicationRule> {
    use Property::*;
    let rule = |id, from, to, bidirectional, citation| ImplicationRule {
        id,
        from,
        to,
        bidirectional,
        citation,
    };
    vec![
        rule(1, Ample, Positive, true, "Kodaira embedding theorem; Demailly, Example 3.14"),
        rule(2, Positive, Semipositive, false, "by definition"),
        rule(3, Semipositive, Nef, false, "Demailly, Proposition 6.10"),
        rule(4, Positive, Big, false, "Demailly, Corollary 6.19"),
        rule(
            5,
            TopologicallyTrivial,
            Semipositive,
            false,
            "Ueda, Proposition 1 (Kashiwara): topologically trivial bundles on compact Kaehler manifolds are unitary flat",
        ),
    ]
}

/// Directed edges, with both directions for equivalences.
fn edges() -> Vec<(Property, Property, u8)> {
    implication_rules()
        .into_iter()
        .flat_map(|r| {
            let mut e = vec![(r.from, r.to, r.id)];
            if r.bidirectional {
                e.push((r.to, r.from, r.id));
            }
            e
        })
        .collect()
}

/// Shortest chain of rule ids deriving `to` from `from`.
pub fn implication_path(from: Property, to: Property) -> Option<Vec<u8>> {
    let edges = edges();
    let mut prev: BTreeMap<Property, (Property, u8)> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        if p == to {
            let mut path = Vec::new();
            let mut cur = to;
            while cur != from {
                let (before, id) = prev[&cur];
                path.push(id);
                cur = before;
            }
            path.reverse();
            return Some(path);
        }
        for &(a, b, id) in &edges {
            if a == p && b != from && !prev.contains_key(&b) {
                prev.insert(b, (a, id));
                queue.push_back(b);
            }
        }
    }
    None
}
