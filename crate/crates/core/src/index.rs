//! Storage indexed by a symmetric integer range `-K..=K`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZVec<T> {
    kmax: i64,
    data: Vec<T>,
}

impl<T> ZVec<T> {
    pub fn from_fn(kmax: i64, mut f: impl FnMut(i64) -> T) -> Self {
        let data = (-kmax..=kmax).map(&mut f).collect();
        Self { kmax, data }
    }

    pub fn try_from_fn<E>(kmax: i64, mut f: impl FnMut(i64) -> Result<T, E>) -> Result<Self, E> {
        let data = (-kmax..=kmax).map(&mut f).collect::<Result<Vec<_>, E>>()?;
        Ok(Self { kmax, data })
    }

    /// Builds from values listed in index order `-kmax..=kmax`.
    pub fn from_vec(kmax: i64, data: Vec<T>) -> Self {
        assert_eq!(data.len() as i64, 2 * kmax + 1, "length must be 2K+1");
        Self { kmax, data }
    }

    pub fn kmax(&self) -> i64 {
        self.kmax
    }

    pub fn contains(&self, k: i64) -> bool {
        k.abs() <= self.kmax
    }

    pub fn get(&self, k: i64) -> Option<&T> {
        if self.contains(k) {
            Some(&self.data[(k + self.kmax) as usize])
        } else {
            None
        }
    }

    pub fn get_mut(&mut self, k: i64) -> Option<&mut T> {
        if self.contains(k) {
            Some(&mut self.data[(k + self.kmax) as usize])
        } else {
            None
        }
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        -self.kmax..=self.kmax
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> {
        self.indices().zip(self.data.iter())
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, mut f: impl FnMut(i64, &T) -> U) -> ZVec<U> {
        ZVec {
            kmax: self.kmax,
            data: self.iter().map(|(k, v)| f(k, v)).collect(),
        }
    }
}

impl<T> std::ops::Index<i64> for ZVec<T> {
    type Output = T;
    fn index(&self, k: i64) -> &T {
        self.get(k)
            .unwrap_or_else(|| panic!("index {k} outside -{0}..={0}", self.kmax))
    }
}

impl<T> std::ops::IndexMut<i64> for ZVec<T> {
    fn index_mut(&mut self, k: i64) -> &mut T {
        let kmax = self.kmax;
        self.get_mut(k)
            .unwrap_or_else(|| panic!("index {k} outside -{kmax}..={kmax}"))
    }
}
