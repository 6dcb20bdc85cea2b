use serde::{Deserialize, Serialize};

/// Named stencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// `{±1}` in 1D.
    Line,
    /// The 8 nearest lattice neighbors.
    Eight,
    /// The 8 nearest plus the 8 knight moves `(±2,±1)`, `(±1,±2)`.
    Sixteen,
}

/// Symmetric set of lattice offsets, sorted lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    offsets: Vec<[i32; 2]>,
    /// Euclidean length of each offset in units of `h`.
    lengths: Vec<f64>,
}

impl DirectionSet {
    pub fn new(stencil: Stencil) -> DirectionSet {
        let mut offsets: Vec<[i32; 2]> = match stencil {
            Stencil::Line => vec![[-1, 0], [1, 0]],
            Stencil::Eight | Stencil::Sixteen => {
                let mut v = Vec::new();
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        if (dx, dy) != (0, 0) {
                            v.push([dx, dy]);
                        }
                    }
                }
                if stencil == Stencil::Sixteen {
                    for (a, b) in [(2, 1), (1, 2)] {
                        for sx in [-1, 1] {
                            for sy in [-1, 1] {
                                v.push([sx * a, sy * b]);
                            }
                        }
                    }
                }
                v
            }
        };
        offsets.sort();
        let lengths = offsets
            .iter()
            .map(|o| f64::from(o[0]).hypot(f64::from(o[1])))
            .collect();
        DirectionSet {
            dim: if stencil == Stencil::Line { 1 } else { 2 },
            offsets,
            lengths,
        }
    }

    pub fn line() -> Self {
        Self::new(Stencil::Line)
    }
    pub fn eight() -> Self {
        Self::new(Stencil::Eight)
    }
    pub fn sixteen() -> Self {
        Self::new(Stencil::Sixteen)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn offsets(&self) -> &[[i32; 2]] {
        &self.offsets
    }
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }
    pub fn len(&self) -> usize {
        self.offsets.len()
    }
    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Largest per-axis offset.
    pub fn reach(&self) -> usize {
        self.offsets
            .iter()
            .map(|o| o[0].unsigned_abs().max(o[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Flat index shifts on a lattice with `row` nodes per row.
    pub(crate) fn linear_shifts(&self, row: usize) -> Vec<isize> {
        self.offsets
            .iter()
            .map(|o| o[0] as isize + o[1] as isize * row as isize)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sets_are_symmetric_and_sized() {
        for (s, n) in [(Stencil::Line, 2), (Stencil::Eight, 8), (Stencil::Sixteen, 16)] {
            let d = DirectionSet::new(s);
            assert_eq!(d.len(), n);
            for o in d.offsets() {
                assert!(d.offsets().contains(&[-o[0], -o[1]]));
            }
            let mut sorted = d.offsets().to_vec();
            sorted.sort();
            assert_eq!(sorted, d.offsets());
        }
        let e = DirectionSet::eight();
        let diag = e.offsets().iter().position(|o| *o == [1, 1]).unwrap();
        assert!((e.lengths()[diag] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(DirectionSet::sixteen().reach(), 2);
    }
}
