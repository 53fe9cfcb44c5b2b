//! Label generalization hierarchy.
//!
//! A rooted tree over labels whose root is `*`. The text form has one
//! `<child> <parent>` pair per line; top-level labels name `*` as parent.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Label, SocialNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelHierarchy {
    parent: BTreeMap<Label, Label>,
}

impl LabelHierarchy {
    /// Hierarchy where every label sits directly under the root, so the only
    /// generalization available is suppression to `*`.
    pub fn flat<I: IntoIterator<Item = Label>>(labels: I) -> Self {
        let parent = labels
            .into_iter()
            .filter(|l| !l.is_root())
            .map(|l| (l, Label::root()))
            .collect();
        LabelHierarchy { parent }
    }

    /// Flat hierarchy over the labels used by `g`.
    pub fn flat_over(g: &SocialNetwork) -> Self {
        Self::flat(g.label_universe())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Label, Label)>>(pairs: I) -> Result<Self> {
        let mut parent = BTreeMap::new();
        for (child, par) in pairs {
            if child.is_root() {
                return Err(Error::InvalidHierarchy(
                    "the root * cannot have a parent".into(),
                ));
            }
            if child == par {
                return Err(Error::InvalidHierarchy(format!(
                    "{child} is its own parent"
                )));
            }
            if parent.insert(child.clone(), par).is_some() {
                return Err(Error::InvalidHierarchy(format!("{child} has two parents")));
            }
        }
        let h = LabelHierarchy { parent };
        for child in h.parent.keys() {
            let mut steps = 0;
            let mut cur = child;
            while !cur.is_root() {
                cur = h.parent.get(cur).ok_or_else(|| {
                    Error::InvalidHierarchy(format!("{cur} is not connected to the root"))
                })?;
                steps += 1;
                if steps > h.parent.len() {
                    return Err(Error::InvalidHierarchy(format!("cycle through {child}")));
                }
            }
        }
        Ok(h)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            match line.split_whitespace().collect::<Vec<_>>().as_slice() {
                [child, parent] => pairs.push((
                    Label::new(child).map_err(|e| err(e.to_string()))?,
                    Label::new(parent).map_err(|e| err(e.to_string()))?,
                )),
                _ => return Err(err(format!("expected <child> <parent>, got {line:?}"))),
            }
        }
        Self::from_pairs(pairs)
    }

    pub fn to_text(&self) -> String {
        self.parent
            .iter()
            .map(|(c, p)| format!("{c} {p}\n"))
            .collect()
    }

    /// Adds any label of `g` missing from the hierarchy directly under the root.
    pub fn extend_flat(&mut self, g: &SocialNetwork) {
        for l in g.label_universe() {
            if !self.contains(&l) {
                self.parent.insert(l, Label::root());
            }
        }
    }

    pub fn contains(&self, l: &Label) -> bool {
        l.is_root() || self.parent.contains_key(l)
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out: BTreeSet<Label> = self.parent.keys().cloned().collect();
        out.insert(Label::root());
        out
    }

    pub fn parent(&self, l: &Label) -> Option<&Label> {
        self.parent.get(l)
    }

    /// `l` followed by its ancestors up to and including the root.
    pub fn ancestors(&self, l: &Label) -> Result<Vec<Label>> {
        if !self.contains(l) {
            return Err(Error::LabelNotInHierarchy(l.clone()));
        }
        let mut out = vec![l.clone()];
        let mut cur = l;
        while let Some(p) = self.parent.get(cur) {
            out.push(p.clone());
            cur = p;
        }
        Ok(out)
    }

    pub fn depth(&self, l: &Label) -> Result<usize> {
        Ok(self.ancestors(l)?.len() - 1)
    }

    /// Least common ancestor of `a` and `b`.
    pub fn lca(&self, a: &Label, b: &Label) -> Result<Label> {
        let up_a = self.ancestors(a)?;
        let up_b: BTreeSet<Label> = self.ancestors(b)?.into_iter().collect();
        Ok(up_a
            .into_iter()
            .find(|l| up_b.contains(l))
            .expect("every chain ends at the root"))
    }

    /// Number of generalization steps from `from` up to `to`, or `None` when
    /// `to` is not an ancestor-or-self of `from`.
    pub fn steps_up(&self, from: &Label, to: &Label) -> Result<Option<usize>> {
        Ok(self.ancestors(from)?.iter().position(|l| l == to))
    }

    /// Fails with the first label of `g` that the hierarchy lacks.
    pub fn check_covers(&self, g: &SocialNetwork) -> Result<()> {
        match g.label_universe().into_iter().find(|l| !self.contains(l)) {
            Some(l) => Err(Error::LabelNotInHierarchy(l)),
            None => Ok(()),
        }
    }
}

/// The most specific label that generalizes both `a` and `b`.
pub fn generalize_label(h: &LabelHierarchy, a: &Label, b: &Label) -> Result<Label> {
    h.lca(a, b)
}
