//! Global alignment with linear gap costs.

use super::ResidueError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentParams {
    pub match_score: f64,
    pub mismatch_score: f64,
    /// Cost added per gap column; negative.
    pub gap_penalty: f64,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        AlignmentParams {
            match_score: 1.0,
            mismatch_score: -1.0,
            gap_penalty: -2.0,
        }
    }
}

impl AlignmentParams {
    pub fn validate(&self) -> Result<(), ResidueError> {
        if !(self.match_score > self.mismatch_score) || !(self.gap_penalty < 0.0) {
            return Err(ResidueError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }

    fn pair(&self, a: u8, b: u8) -> f64 {
        if a == b {
            self.match_score
        } else {
            self.mismatch_score
        }
    }
}

/// One alignment column as 0-based positions into each sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Pair(usize, usize),
    /// Residue of the first sequence against a gap.
    GapInSecond(usize),
    /// Residue of the second sequence against a gap.
    GapInFirst(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub score: f64,
    pub columns: Vec<Column>,
}

impl Alignment {
    /// Aligned position pairs, in order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.columns.iter().filter_map(|c| match c {
            Column::Pair(i, j) => Some((*i, *j)),
            _ => None,
        })
    }

    /// The two gapped rows, gaps drawn as `-`.
    pub fn render(&self, a: &[u8], b: &[u8]) -> (String, String) {
        let mut top = String::new();
        let mut bottom = String::new();
        for c in &self.columns {
            match *c {
                Column::Pair(i, j) => {
                    top.push(a[i] as char);
                    bottom.push(b[j] as char);
                }
                Column::GapInSecond(i) => {
                    top.push(a[i] as char);
                    bottom.push('-');
                }
                Column::GapInFirst(j) => {
                    top.push('-');
                    bottom.push(b[j] as char);
                }
            }
        }
        (top, bottom)
    }
}

// Cells carry (score, runs). Among equal scores the alignment with fewer
// separate diagonal runs wins, so an exact contiguous occurrence is never
// split by a co-optimal gap shuffle.
#[derive(Clone, Copy)]
struct Cell {
    score: f64,
    runs: u32,
    from: u8,
}

const NONE: u8 = 3;
const DIAG: u8 = 0;
const UP: u8 = 1;
const LEFT: u8 = 2;

const NEG: Cell = Cell {
    score: f64::NEG_INFINITY,
    runs: u32::MAX,
    from: NONE,
};

fn better(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

// Picks the best of the three predecessor states, preferring diagonal,
// then up, then left on exact ties.
fn best_of(options: [(f64, u32); 3]) -> (f64, u32, u8) {
    let mut pick = 0usize;
    for k in 1..3 {
        if better(options[k], options[pick]) {
            pick = k;
        }
    }
    (options[pick].0, options[pick].1, pick as u8)
}

/// Needleman-Wunsch over bytes.
pub fn needleman_wunsch(
    a: &[u8],
    b: &[u8],
    params: &AlignmentParams,
) -> Result<Alignment, ResidueError> {
    params.validate()?;
    if a.is_empty() || b.is_empty() {
        return Err(ResidueError::EmptySequence);
    }
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    // three layers: last column diagonal, gap in second, gap in first
    let mut diag = vec![NEG; (n + 1) * w];
    let mut up = vec![NEG; (n + 1) * w];
    let mut left = vec![NEG; (n + 1) * w];
    diag[0] = Cell {
        score: 0.0,
        runs: 0,
        from: NONE,
    };
    let g = params.gap_penalty;

    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let at = i * w + j;
            if i > 0 && j > 0 {
                let p = (i - 1) * w + (j - 1);
                let s = params.pair(a[i - 1], b[j - 1]);
                let (score, runs, from) = best_of([
                    (diag[p].score, diag[p].runs),
                    (up[p].score, up[p].runs.saturating_add(1)),
                    (left[p].score, left[p].runs.saturating_add(1)),
                ]);
                // the start cell lives in the diagonal layer but opens a run
                let runs = if i == 1 && j == 1 { 1 } else { runs };
                diag[at] = Cell {
                    score: score + s,
                    runs,
                    from,
                };
            }
            if i > 0 {
                let p = (i - 1) * w + j;
                let (score, runs, from) = best_of([
                    (diag[p].score, diag[p].runs),
                    (up[p].score, up[p].runs),
                    (left[p].score, left[p].runs),
                ]);
                up[at] = Cell {
                    score: score + g,
                    runs,
                    from,
                };
            }
            if j > 0 {
                let p = i * w + (j - 1);
                let (score, runs, from) = best_of([
                    (diag[p].score, diag[p].runs),
                    (up[p].score, up[p].runs),
                    (left[p].score, left[p].runs),
                ]);
                left[at] = Cell {
                    score: score + g,
                    runs,
                    from,
                };
            }
        }
    }

    let end = n * w + m;
    let (score, _, mut state) = best_of([
        (diag[end].score, diag[end].runs),
        (up[end].score, up[end].runs),
        (left[end].score, left[end].runs),
    ]);

    let mut columns = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let at = i * w + j;
        match state {
            DIAG => {
                columns.push(Column::Pair(i - 1, j - 1));
                state = diag[at].from;
                i -= 1;
                j -= 1;
            }
            UP => {
                columns.push(Column::GapInSecond(i - 1));
                state = up[at].from;
                i -= 1;
            }
            LEFT => {
                columns.push(Column::GapInFirst(j - 1));
                state = left[at].from;
                j -= 1;
            }
            _ => unreachable!("traceback left the matrix at ({i}, {j})"),
        }
    }
    columns.reverse();
    Ok(Alignment { score, columns })
}

/// Score of an explicit column list.
pub fn score_columns(a: &[u8], b: &[u8], columns: &[Column], params: &AlignmentParams) -> f64 {
    columns
        .iter()
        .map(|c| match *c {
            Column::Pair(i, j) => params.pair(a[i], b[j]),
            _ => params.gap_penalty,
        })
        .sum()
}
