use super::{BddError, Result, Var};

/// A strictly increasing list of variable ids, used for quantification and
/// counting.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct VarSet {
    vars: Vec<Var>,
}

impl VarSet {
    pub fn new(vars: impl IntoIterator<Item = Var>) -> Result<Self> {
        let vars: Vec<Var> = vars.into_iter().collect();
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BddError::UnsortedVarSet);
        }
        Ok(VarSet { vars })
    }

    /// Builds a set from ids in any order, dropping duplicates.
    pub fn from_unsorted(vars: impl IntoIterator<Item = Var>) -> Self {
        let mut vars: Vec<Var> = vars.into_iter().collect();
        vars.sort_unstable();
        vars.dedup();
        VarSet { vars }
    }

    pub fn empty() -> Self {
        VarSet::default()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.vars.binary_search(&v).is_ok()
    }

    pub fn last(&self) -> Option<Var> {
        self.vars.last().copied()
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        VarSet::from_unsorted(self.vars.iter().chain(other.vars.iter()).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted() {
        assert_eq!(VarSet::new([2, 1]), Err(BddError::UnsortedVarSet));
        assert_eq!(VarSet::new([1, 1]), Err(BddError::UnsortedVarSet));
        assert!(VarSet::new([0, 3, 7]).is_ok());
    }

    #[test]
    fn from_unsorted_dedups() {
        let s = VarSet::from_unsorted([5, 1, 5, 3]);
        assert_eq!(s.vars(), &[1, 3, 5]);
        assert!(s.contains(3));
        assert!(!s.contains(2));
        assert_eq!(s.last(), Some(5));
    }
}
