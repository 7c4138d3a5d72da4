use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{
    entropy_of, normalize_probs, Kernel, Pmf, ProbError, Result, DEFAULT_CELL_CAP, MI_CLAMP_TOL,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// Dense joint pmf over named finite alphabets, row-major with the last axis
/// varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr", into = "JointRepr")]
pub struct JointPmf {
    axes: Vec<Axis>,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointRepr {
    axes: Vec<String>,
    shape: Vec<usize>,
    table: Vec<f64>,
}

impl TryFrom<JointRepr> for JointPmf {
    type Error = ProbError;

    fn try_from(r: JointRepr) -> Result<Self> {
        if r.axes.len() != r.shape.len() {
            return Err(ProbError::ShapeMismatch(format!(
                "{} axis names but {} sizes",
                r.axes.len(),
                r.shape.len()
            )));
        }
        JointPmf::new(
            r.axes
                .into_iter()
                .zip(r.shape)
                .map(|(n, s)| Axis::new(n, s))
                .collect(),
            r.table,
        )
    }
}

impl From<JointPmf> for JointRepr {
    fn from(j: JointPmf) -> Self {
        JointRepr {
            shape: j.axes.iter().map(|a| a.size).collect(),
            axes: j.axes.into_iter().map(|a| a.name).collect(),
            table: j.table,
        }
    }
}

/// One conditional factor in a [`compose`] chain: `kernel` maps the product
/// alphabet of `inputs` (existing axes) to the product alphabet of `outputs`
/// (new axes).
#[derive(Clone, Debug)]
pub struct Factor<'a> {
    pub kernel: &'a Kernel,
    pub inputs: Vec<String>,
    pub outputs: Vec<Axis>,
}

impl<'a> Factor<'a> {
    pub fn new(kernel: &'a Kernel, inputs: &[&str], outputs: &[(&str, usize)]) -> Self {
        Self {
            kernel,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|&(n, s)| Axis::new(n, s)).collect(),
        }
    }
}

fn cell_count(sizes: impl IntoIterator<Item = usize>) -> u128 {
    sizes.into_iter().map(|s| s as u128).product()
}

impl JointPmf {
    pub fn new(axes: Vec<Axis>, table: Vec<f64>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &axes {
            if !seen.insert(a.name.as_str()) {
                return Err(ProbError::DuplicateAxis(a.name.clone()));
            }
            if a.size == 0 {
                return Err(ProbError::ShapeMismatch(format!(
                    "axis `{}` has size 0",
                    a.name
                )));
            }
        }
        let cells = cell_count(axes.iter().map(|a| a.size));
        if cells != table.len() as u128 {
            return Err(ProbError::ShapeMismatch(format!(
                "table has {} cells, axes imply {cells}",
                table.len()
            )));
        }
        Ok(Self {
            axes,
            table: normalize_probs(table)?,
        })
    }

    pub fn from_pmf(name: &str, p: &Pmf) -> Self {
        Self {
            axes: vec![Axis::new(name, p.len())],
            table: p.probs().to_vec(),
        }
    }

    /// `p(x) p(y|x)` on axes `(x_name, y_name)`.
    pub fn from_channel(x_name: &str, p: &Pmf, y_name: &str, k: &Kernel) -> Result<Self> {
        Self::from_pmf(x_name, p).extend(&Factor::new(k, &[x_name], &[(y_name, k.n_out())]))
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| ProbError::UnknownVariable(name.to_string()))
    }

    pub fn axis_size(&self, name: &str) -> Result<usize> {
        Ok(self.axes[self.axis_index(name)?].size)
    }

    fn indices(&self, vars: &[&str]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        vars.iter()
            .map(|v| {
                let i = self.axis_index(v)?;
                if !seen.insert(i) {
                    return Err(ProbError::DuplicateAxis(v.to_string()));
                }
                Ok(i)
            })
            .collect()
    }

    /// Probability of one cell given per-axis symbols.
    pub fn get(&self, symbols: &[usize]) -> f64 {
        let mut idx = 0;
        for (a, &s) in self.axes.iter().zip(symbols) {
            idx = idx * a.size + s;
        }
        self.table[idx]
    }

    /// Marginal table over axis indices `keep`, laid out row-major in the order
    /// given (so this also transposes).
    pub fn marginal_table(&self, keep: &[usize]) -> Vec<f64> {
        let d = self.axes.len();
        let mut out_stride = vec![0usize; d];
        let mut stride = 1;
        for &k in keep.iter().rev() {
            out_stride[k] = stride;
            stride *= self.axes[k].size;
        }
        let mut out = vec![0.0; stride];
        let sizes: Vec<usize> = self.axes.iter().map(|a| a.size).collect();
        let mut counters = vec![0usize; d];
        let mut out_idx = 0usize;
        for &p in &self.table {
            out[out_idx] += p;
            let mut a = d;
            while a > 0 {
                a -= 1;
                counters[a] += 1;
                out_idx += out_stride[a];
                if counters[a] < sizes[a] {
                    break;
                }
                out_idx -= out_stride[a] * sizes[a];
                counters[a] = 0;
            }
        }
        out
    }

    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        if keep.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        let idx = self.indices(keep)?;
        let table = self.marginal_table(&idx);
        Ok(JointPmf {
            axes: idx.iter().map(|&i| self.axes[i].clone()).collect(),
            table,
        })
    }

    /// Same law with axes permuted into `order` (which must name every axis).
    pub fn reorder(&self, order: &[&str]) -> Result<JointPmf> {
        if order.len() != self.axes.len() {
            return Err(ProbError::ShapeMismatch(format!(
                "reorder needs all {} axes, got {}",
                self.axes.len(),
                order.len()
            )));
        }
        self.marginalize(order)
    }

    /// Joint entropy in bits of the variables `vars`.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64> {
        if vars.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        Ok(self.entropy_idx(&self.indices(vars)?))
    }

    /// Entropy of the marginal on axis indices; the empty set has entropy 0.
    pub fn entropy_idx(&self, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        if idx.len() == self.axes.len() {
            return entropy_of(&self.table);
        }
        entropy_of(&self.marginal_table(idx))
    }

    /// `I(A;B|C)` in bits. `c` may be empty.
    pub fn mutual_information(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        let ia = self.indices(a)?;
        let ib = self.indices(b)?;
        let ic = self.indices(c)?;
        for (name, i) in a.iter().zip(&ia) {
            if ib.contains(i) || ic.contains(i) {
                return Err(ProbError::OverlappingSubsets(name.to_string()));
            }
        }
        for (name, i) in b.iter().zip(&ib) {
            if ic.contains(i) {
                return Err(ProbError::OverlappingSubsets(name.to_string()));
            }
        }
        Ok(self.mutual_information_idx(&ia, &ib, &ic))
    }

    pub fn mutual_information_idx(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        let cat = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
        let ac = cat(a, c);
        let bc = cat(b, c);
        let abc = cat(&ac, b);
        let mi = self.entropy_idx(&ac) + self.entropy_idx(&bc)
            - self.entropy_idx(&abc)
            - self.entropy_idx(c);
        clamp_information(mi)
    }

    /// Appends the outputs of one conditional factor.
    pub fn extend(&self, f: &Factor) -> Result<JointPmf> {
        let in_idx = self.inputs_of(&f.inputs).map_err(|e| match e {
            ProbError::UnknownVariable(v) => ProbError::DanglingWire(v),
            other => other,
        })?;
        let n_rows: usize = in_idx.iter().map(|&i| self.axes[i].size).product();
        if n_rows != f.kernel.n_in() {
            return Err(ProbError::AlphabetMismatch(format!(
                "kernel has {} input rows but inputs {:?} span {n_rows}",
                f.kernel.n_in(),
                f.inputs
            )));
        }
        let n_out: usize = f.outputs.iter().map(|a| a.size).product();
        if n_out != f.kernel.n_out() {
            return Err(ProbError::AlphabetMismatch(format!(
                "kernel has {} outputs but axes {:?} span {n_out}",
                f.kernel.n_out(),
                f.outputs.iter().map(|a| &a.name).collect::<Vec<_>>()
            )));
        }
        for o in &f.outputs {
            if self.axes.iter().any(|a| a.name == o.name) {
                return Err(ProbError::DuplicateAxis(o.name.clone()));
            }
        }
        let rows = self.marginal_row_index(&in_idx);
        let mut table = vec![0.0; self.table.len() * n_out];
        for (cell, (&p, &r)) in self.table.iter().zip(&rows).enumerate() {
            if p == 0.0 {
                continue;
            }
            let dst = &mut table[cell * n_out..(cell + 1) * n_out];
            for (d, &k) in dst.iter_mut().zip(f.kernel.row(r)) {
                *d = p * k;
            }
        }
        let mut axes = self.axes.clone();
        axes.extend(f.outputs.iter().cloned());
        Ok(JointPmf { axes, table })
    }

    fn inputs_of(&self, names: &[String]) -> Result<Vec<usize>> {
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        self.indices(&refs)
    }

    /// For every cell, its row-major index over the axes `idx`.
    fn marginal_row_index(&self, idx: &[usize]) -> Vec<usize> {
        let d = self.axes.len();
        let mut stride_of = vec![0usize; d];
        let mut stride = 1;
        for &k in idx.iter().rev() {
            stride_of[k] = stride;
            stride *= self.axes[k].size;
        }
        let sizes: Vec<usize> = self.axes.iter().map(|a| a.size).collect();
        let mut counters = vec![0usize; d];
        let mut cur = 0usize;
        let mut out = Vec::with_capacity(self.table.len());
        for _ in 0..self.table.len() {
            out.push(cur);
            let mut a = d;
            while a > 0 {
                a -= 1;
                counters[a] += 1;
                cur += stride_of[a];
                if counters[a] < sizes[a] {
                    break;
                }
                cur -= stride_of[a] * sizes[a];
                counters[a] = 0;
            }
        }
        out
    }

    /// Extracts `p(of | given)` as a kernel. Rows for conditioning values of
    /// zero probability are uniform.
    pub fn conditional(&self, of: &[&str], given: &[&str]) -> Result<Kernel> {
        let gi = self.indices(given)?;
        let oi = self.indices(of)?;
        if let Some(v) = of.iter().find(|v| given.contains(v)) {
            return Err(ProbError::OverlappingSubsets(v.to_string()));
        }
        let all: Vec<usize> = gi.iter().chain(&oi).copied().collect();
        let t = self.marginal_table(&all);
        let n_out: usize = oi.iter().map(|&i| self.axes[i].size).product();
        let n_in = t.len() / n_out;
        let rows = t
            .chunks(n_out)
            .map(|row| {
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.iter().map(|&p| p / s).collect()
                } else {
                    vec![1.0 / n_out as f64; n_out]
                }
            })
            .collect::<Vec<Vec<f64>>>();
        debug_assert_eq!(rows.len(), n_in);
        Kernel::new(rows)
    }

    /// `n` i.i.d. copies. Axis `A` of copy `i` (1-based) is named `A_i`, and
    /// copies are laid out in order, copy 1 slowest.
    pub fn iid_extend(&self, n: usize) -> Result<JointPmf> {
        self.iid_extend_with_cap(n, DEFAULT_CELL_CAP)
    }

    pub fn iid_extend_with_cap(&self, n: usize, cap: usize) -> Result<JointPmf> {
        if n == 0 {
            return Err(ProbError::InvalidArgument("iid_extend needs n >= 1".into()));
        }
        let cells = (self.table.len() as u128)
            .checked_pow(n as u32)
            .unwrap_or(u128::MAX);
        if cells > cap as u128 {
            return Err(ProbError::CapExceeded { cells, cap });
        }
        let mut table = vec![1.0];
        for _ in 0..n {
            let mut next = Vec::with_capacity(table.len() * self.table.len());
            for &a in &table {
                next.extend(self.table.iter().map(|&b| a * b));
            }
            table = next;
        }
        let axes = (1..=n)
            .flat_map(|i| {
                self.axes
                    .iter()
                    .map(move |a| Axis::new(format!("{}_{}", a.name, i), a.size))
            })
            .collect();
        Ok(JointPmf { axes, table })
    }

    /// Relabels axes in place of their old names.
    pub fn rename(&self, names: &[&str]) -> Result<JointPmf> {
        if names.len() != self.axes.len() {
            return Err(ProbError::ShapeMismatch(
                "rename needs one name per axis".into(),
            ));
        }
        JointPmf::new(
            self.axes
                .iter()
                .zip(names)
                .map(|(a, n)| Axis::new(*n, a.size))
                .collect(),
            self.table.clone(),
        )
    }
}

/// Pins information values that are negative only through rounding to 0.
pub(crate) fn clamp_information(v: f64) -> f64 {
    if (-MI_CLAMP_TOL..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// Chains kernels onto a root pmf named `root`.
pub fn compose(root: &str, input: &Pmf, factors: &[Factor]) -> Result<JointPmf> {
    factors
        .iter()
        .try_fold(JointPmf::from_pmf(root, input), |j, f| j.extend(f))
}

/// Unhalved L1 distance `sum |p - q|`, in `[0, 2]`.
///
/// Axes are matched by name; `q` is transposed to `p`'s order if needed.
pub fn total_variation(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    if p.axes.len() != q.axes.len() {
        return Err(ProbError::ShapeMismatch(format!(
            "{} axes vs {} axes",
            p.axes.len(),
            q.axes.len()
        )));
    }
    let q_aligned;
    let q_table = if p.axes == q.axes {
        &q.table
    } else {
        let order: Vec<&str> = p.axes.iter().map(|a| a.name.as_str()).collect();
        q_aligned = q
            .reorder(&order)
            .map_err(|e| ProbError::ShapeMismatch(e.to_string()))?;
        if q_aligned.axes != p.axes {
            return Err(ProbError::ShapeMismatch("alphabet sizes differ".into()));
        }
        &q_aligned.table
    };
    Ok(p.table
        .iter()
        .zip(q_table)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fair_bits_equal() -> JointPmf {
        JointPmf::new(
            vec![Axis::new("X", 2), Axis::new("Y", 2)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn mi_identical_bits() {
        let j = fair_bits_equal();
        assert!((j.mutual_information(&["X"], &["Y"], &[]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mi_independent_bits() {
        let j = JointPmf::new(vec![Axis::new("X", 2), Axis::new("Y", 2)], vec![0.25; 4]).unwrap();
        assert_eq!(j.mutual_information(&["X"], &["Y"], &[]).unwrap(), 0.0);
    }

    #[test]
    fn mi_bsc_quarter_uniform() {
        let j = JointPmf::from_channel(
            "X",
            &Pmf::uniform(2).unwrap(),
            "Y",
            &Kernel::bsc(0.25).unwrap(),
        )
        .unwrap();
        // 1 - h(0.25)
        let i = j.mutual_information(&["X"], &["Y"], &[]).unwrap();
        assert!((i - 0.188_721_875).abs() < 1e-4, "{i}");
    }

    #[test]
    fn mi_rejects_overlap_and_unknown() {
        let j = fair_bits_equal();
        assert!(matches!(
            j.mutual_information(&["X"], &["X"], &[]),
            Err(ProbError::OverlappingSubsets(_))
        ));
        assert!(matches!(
            j.mutual_information(&["X"], &["Y"], &["X"]),
            Err(ProbError::OverlappingSubsets(_))
        ));
        assert!(matches!(
            j.entropy(&["Q"]),
            Err(ProbError::UnknownVariable(_))
        ));
    }

    #[test]
    fn tv_examples() {
        let a = JointPmf::from_pmf("X", &Pmf::new(vec![0.5, 0.5]).unwrap());
        let b = JointPmf::from_pmf("X", &Pmf::new(vec![0.4, 0.6]).unwrap());
        assert!((total_variation(&a, &b).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(total_variation(&a, &a).unwrap(), 0.0);
        let p = JointPmf::from_pmf("X", &Pmf::point(2, 0).unwrap());
        let q = JointPmf::from_pmf("X", &Pmf::point(2, 1).unwrap());
        assert_eq!(total_variation(&p, &q).unwrap(), 2.0);
    }

    #[test]
    fn tv_shape_mismatch() {
        let a = JointPmf::from_pmf("X", &Pmf::uniform(2).unwrap());
        let b = JointPmf::from_pmf("X", &Pmf::uniform(3).unwrap());
        assert!(matches!(
            total_variation(&a, &b),
            Err(ProbError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn compose_identity_is_diagonal() {
        let id = Kernel::identity(3);
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let j = compose("X", &p, &[Factor::new(&id, &["X"], &[("Y", 3)])]).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let want = if x == y { p.probs()[x] } else { 0.0 };
                assert_eq!(j.get(&[x, y]), want);
            }
        }
    }

    #[test]
    fn compose_bec_erasure_half() {
        let bec = Kernel::bec(0.5).unwrap();
        let j = compose(
            "X",
            &Pmf::uniform(2).unwrap(),
            &[Factor::new(&bec, &["X"], &[("Y", 3)])],
        )
        .unwrap();
        let y = j.marginalize(&["Y"]).unwrap();
        assert!((y.table()[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn compose_chain_gives_bsc_quarter_marginal() {
        let bec = Kernel::bec(0.5).unwrap();
        let coin = Kernel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let j = compose(
            "X",
            &Pmf::uniform(2).unwrap(),
            &[
                Factor::new(&bec, &["X"], &[("E", 3)]),
                Factor::new(&coin, &["E"], &[("Y", 2)]),
            ],
        )
        .unwrap();
        let xy = j.marginalize(&["X", "Y"]).unwrap();
        let want = JointPmf::from_channel(
            "X",
            &Pmf::uniform(2).unwrap(),
            "Y",
            &Kernel::bsc(0.25).unwrap(),
        )
        .unwrap();
        assert!(total_variation(&xy, &want).unwrap() < 1e-15);
    }

    #[test]
    fn compose_wiring_errors() {
        let k = Kernel::identity(2);
        let base = JointPmf::from_pmf("X", &Pmf::uniform(2).unwrap());
        assert!(matches!(
            base.extend(&Factor::new(&k, &["Q"], &[("Y", 2)])),
            Err(ProbError::DanglingWire(_))
        ));
        assert!(matches!(
            base.extend(&Factor::new(&k, &["X"], &[("Y", 3)])),
            Err(ProbError::AlphabetMismatch(_))
        ));
        assert!(matches!(
            base.extend(&Factor::new(&k, &["X"], &[("X", 2)])),
            Err(ProbError::DuplicateAxis(_))
        ));
    }

    #[test]
    fn product_input_alphabet_is_row_major() {
        // Z = X xor Y, kernel rows indexed by (x, y) with x slowest
        let xor = Kernel::deterministic(4, 2, |r| (r / 2) ^ (r % 2)).unwrap();
        let j = JointPmf::new(
            vec![Axis::new("X", 2), Axis::new("Y", 2)],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap()
        .extend(&Factor::new(&xor, &["X", "Y"], &[("Z", 2)]))
        .unwrap();
        assert_eq!(j.get(&[0, 1, 1]), 0.2);
        assert_eq!(j.get(&[1, 0, 1]), 0.3);
        assert_eq!(j.get(&[1, 1, 0]), 0.4);
    }

    #[test]
    fn marginalize_recovers_factor() {
        let k = Kernel::new(vec![vec![0.1, 0.9], vec![0.6, 0.4]]).unwrap();
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        let j = JointPmf::from_channel("X", &p, "Y", &k).unwrap();
        let back = j.conditional(&["Y"], &["X"]).unwrap();
        for (a, b) in back.as_flat().iter().zip(k.as_flat()) {
            assert!((a - b).abs() < 1e-12);
        }
        let px = j.marginalize(&["X"]).unwrap();
        assert!((px.table()[0] - 0.3).abs() < 1e-15);
        assert!(matches!(
            j.marginalize(&["W"]),
            Err(ProbError::UnknownVariable(_))
        ));
        assert_eq!(j.marginalize(&["X", "Y"]).unwrap(), j);
    }

    #[test]
    fn iid_fair_bit_three_copies() {
        let j = JointPmf::from_pmf("X", &Pmf::uniform(2).unwrap());
        let e = j.iid_extend(3).unwrap();
        assert_eq!(e.axis_names(), vec!["X_1", "X_2", "X_3"]);
        assert!(e.table().iter().all(|&p| (p - 0.125).abs() < 1e-15));
        assert_eq!(j.iid_extend(1).unwrap().table(), j.table());
    }

    #[test]
    fn iid_cap() {
        let j = JointPmf::from_pmf("X", &Pmf::uniform(4).unwrap());
        assert!(matches!(
            j.iid_extend_with_cap(10, 1 << 16),
            Err(ProbError::CapExceeded { .. })
        ));
    }

    #[test]
    fn json_schema_shape() {
        let j = fair_bits_equal();
        let s = serde_json::to_string(&j).unwrap();
        assert_eq!(
            s,
            r#"{"axes":["X","Y"],"shape":[2,2],"table":[0.5,0.0,0.0,0.5]}"#
        );
        let back: JointPmf = serde_json::from_str(&s).unwrap();
        assert_eq!(back, j);
        assert!(serde_json::from_str::<JointPmf>(
            r#"{"axes":["X","X"],"shape":[1,1],"table":[1]}"#
        )
        .is_err());
    }
}
