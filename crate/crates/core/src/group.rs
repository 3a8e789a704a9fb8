//! Finite groups given by their Cayley tables.
//!
//! Every group is validated on construction (identity, Latin square,
//! inverses, associativity) and is immutable afterwards. Groups are shared
//! through [`GroupRef`] so that algebra elements and reports can hold on to
//! the group they live in.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Shared handle to an immutable group.
pub type GroupRef = Arc<FiniteGroup>;

/// Largest degree accepted by [`FiniteGroup::symmetric`] (order 720).
pub const MAX_SYMMETRIC_DEGREE: usize = 6;

/// Groups up to this order get the full O(n³) associativity check.
pub const FULL_ASSOCIATIVITY_ORDER: usize = 64;

const ASSOCIATIVITY_SEED: u64 = 0x5eed_ca11_7ab1_e000;

#[derive(Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    labels: Vec<String>,
    /// Row-major: `table[i * n + j]` is the index of `g_i * g_j`.
    table: Vec<usize>,
    identity: usize,
    inverses: Vec<usize>,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteGroup")
            .field("order", &self.order())
            .field("identity", &self.labels[self.identity])
            .finish_non_exhaustive()
    }
}

impl FiniteGroup {
    /// Builds and validates a group from a full multiplication table.
    ///
    /// `table[i][j]` is the index of the product `g_i * g_j`. The identity is
    /// located from the table itself.
    pub fn from_cayley_table(table: Vec<Vec<usize>>, labels: Vec<String>) -> Result<GroupRef> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty Cayley table".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidGroup(format!(
                "{} labels for a table with {n} rows",
                labels.len()
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroup(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for &entry in row {
                if entry >= n {
                    return Err(Error::InvalidGroup(format!(
                        "row {i} contains out-of-range index {entry}"
                    )));
                }
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(flat, labels).map(Arc::new)
    }

    /// Reads a Cayley table in CSV form: a header row of labels followed by
    /// `n` rows of `n` labels, row `i` holding the products `h_i * h_j`.
    pub fn from_csv<R: Read>(reader: R) -> Result<GroupRef> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let labels: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::InvalidGroup(format!("duplicate label {label:?}")));
            }
        }
        let mut table = Vec::with_capacity(labels.len());
        for (row_no, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let row = record
                .iter()
                .map(|cell| {
                    index.get(cell).copied().ok_or_else(|| {
                        Error::InvalidGroup(format!("row {row_no}: unknown label {cell:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(row);
        }
        if table.len() != labels.len() {
            return Err(Error::InvalidGroup(format!(
                "{} rows for {} labels",
                table.len(),
                labels.len()
            )));
        }
        Self::from_cayley_table(table, labels)
    }

    fn from_flat(table: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        let identity = find_identity(&table, n)?;
        check_latin(&table, n)?;
        let inverses = (0..n)
            .map(|i| {
                (0..n)
                    .find(|&j| table[i * n + j] == identity)
                    .ok_or_else(|| Error::InvalidGroup(format!("element {i} has no inverse")))
            })
            .collect::<Result<Vec<_>>>()?;
        let group = FiniteGroup {
            labels,
            table,
            identity,
            inverses,
        };
        group.validate()?;
        Ok(group)
    }

    /// The cyclic group `Z_n` with elements labelled `t^0 .. t^{n-1}`.
    pub fn cyclic(n: usize) -> Result<GroupRef> {
        if n == 0 {
            return Err(Error::InvalidGroup("cyclic group of order 0".into()));
        }
        let labels = (0..n).map(|i| format!("t^{i}")).collect();
        let table = (0..n * n).map(|ij| (ij / n + ij % n) % n).collect();
        Self::from_flat(table, labels).map(Arc::new)
    }

    /// The dihedral group of order `2n`: rotations `r^i` followed by
    /// reflections `sr^i`.
    pub fn dihedral(n: usize) -> Result<GroupRef> {
        if n == 0 {
            return Err(Error::InvalidGroup("dihedral group D_0".into()));
        }
        let order = 2 * n;
        // index i < n is r^i, index n + i is s r^i; s r^i s = r^{-i}
        let product = |a: usize, b: usize| -> usize {
            let (sa, ia) = (a / n, a % n);
            let (sb, ib) = (b / n, b % n);
            let rot = if sb == 1 { (ib + n - ia) % n } else { (ia + ib) % n };
            ((sa + sb) % 2) * n + rot
        };
        let table = (0..order * order)
            .map(|ab| product(ab / order, ab % order))
            .collect();
        let labels = (0..order)
            .map(|k| match (k / n, k % n) {
                (0, 0) => "e".to_string(),
                (0, i) => format!("r^{i}"),
                (_, 0) => "s".to_string(),
                (_, i) => format!("sr^{i}"),
            })
            .collect();
        Self::from_flat(table, labels).map(Arc::new)
    }

    /// The symmetric group on `{1..n}`, `n <= 6`, with permutations listed
    /// in lexicographic order (identity first) and labelled in cycle
    /// notation. The product `στ` applies `τ` first.
    pub fn symmetric(n: usize) -> Result<GroupRef> {
        if n == 0 || n > MAX_SYMMETRIC_DEGREE {
            return Err(Error::InvalidGroup(format!(
                "symmetric degree must be in 1..={MAX_SYMMETRIC_DEGREE}, got {n}"
            )));
        }
        let perms = permutations(n);
        let index: HashMap<Vec<usize>, usize> = perms
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let order = perms.len();
        let mut table = Vec::with_capacity(order * order);
        for sigma in &perms {
            for tau in &perms {
                let composed: Vec<usize> = tau.iter().map(|&k| sigma[k]).collect();
                table.push(index[&composed]);
            }
        }
        let labels = perms.iter().map(|p| cycle_notation(p)).collect();
        Self::from_flat(table, labels).map(Arc::new)
    }

    /// Direct product `a × b`; element `(g, h)` has index `g * |b| + h`.
    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Result<GroupRef> {
        let (na, nb) = (a.order(), b.order());
        let order = na * nb;
        let mut table = Vec::with_capacity(order * order);
        for x in 0..order {
            for y in 0..order {
                let g = a.mul(x / nb, y / nb);
                let h = b.mul(x % nb, y % nb);
                table.push(g * nb + h);
            }
        }
        let labels = (0..order)
            .map(|x| format!("({},{})", a.label(x / nb), b.label(x % nb)))
            .collect();
        Self::from_flat(table, labels).map(Arc::new)
    }

    /// Runs the full invariant suite: identity, Latin square, inverses and
    /// associativity (exhaustive up to order 64, sampled above).
    pub fn validate(&self) -> Result<()> {
        let n = self.order();
        let e = self.identity;
        for i in 0..n {
            if self.mul(e, i) != i || self.mul(i, e) != i {
                return Err(Error::InvalidGroup(format!(
                    "{} is not a two-sided identity",
                    self.labels[e]
                )));
            }
            let inv = self.inverses[i];
            if self.mul(i, inv) != e || self.mul(inv, i) != e {
                return Err(Error::InvalidGroup(format!(
                    "{} has no two-sided inverse",
                    self.labels[i]
                )));
            }
        }
        check_latin(&self.table, n)?;
        if n <= FULL_ASSOCIATIVITY_ORDER {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        self.check_triple(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(ASSOCIATIVITY_SEED);
            for _ in 0..10 * n * n {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                self.check_triple(i, j, k)?;
            }
        }
        Ok(())
    }

    fn check_triple(&self, i: usize, j: usize, k: usize) -> Result<()> {
        if self.mul(self.mul(i, j), k) != self.mul(i, self.mul(j, k)) {
            return Err(Error::InvalidGroup(format!(
                "associativity fails for ({}, {}, {})",
                self.labels[i], self.labels[j], self.labels[k]
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order() + b]
    }

    #[inline]
    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn inverses(&self) -> &[usize] {
        &self.inverses
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Row `a` of the Cayley table.
    pub fn row(&self, a: usize) -> &[usize] {
        let n = self.order();
        &self.table[a * n..(a + 1) * n]
    }

    /// `a^k` by repeated multiplication.
    pub fn pow(&self, a: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, a))
    }

    /// Least `k >= 1` with `a^k = e`.
    pub fn element_order(&self, a: usize) -> usize {
        let mut k = 1;
        let mut acc = a;
        while acc != self.identity {
            acc = self.mul(acc, a);
            k += 1;
        }
        k
    }

    /// Structural equality, short-circuiting on pointer identity.
    pub fn same_as(a: &GroupRef, b: &GroupRef) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }
}

fn find_identity(table: &[usize], n: usize) -> Result<usize> {
    let mut candidates =
        (0..n).filter(|&e| (0..n).all(|x| table[e * n + x] == x && table[x * n + e] == x));
    match (candidates.next(), candidates.next()) {
        (Some(e), None) => Ok(e),
        (None, _) => Err(Error::InvalidGroup("no identity element".into())),
        (Some(_), Some(_)) => Err(Error::InvalidGroup("identity is not unique".into())),
    }
}

fn check_latin(table: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for i in 0..n {
        seen.iter_mut().for_each(|s| *s = false);
        for j in 0..n {
            let v = table[i * n + j];
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidGroup(format!("row {i} repeats index {v}")));
            }
        }
        seen.iter_mut().for_each(|s| *s = false);
        for j in 0..n {
            let v = table[j * n + i];
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidGroup(format!("column {i} repeats index {v}")));
            }
        }
    }
    Ok(())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                extend(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

fn cycle_notation(perm: &[usize]) -> String {
    let mut visited = vec![false; perm.len()];
    let mut out = String::new();
    for start in 0..perm.len() {
        if visited[start] || perm[start] == start {
            continue;
        }
        out.push('(');
        let mut k = start;
        while !visited[k] {
            visited[k] = true;
            out.push_str(&(k + 1).to_string());
            k = perm[k];
        }
        out.push(')');
    }
    if out.is_empty() {
        out.push('e');
    }
    out
}

/// A sorted, duplicate-free set of elements of one group.
#[derive(Clone)]
pub struct ElementSet {
    group: GroupRef,
    members: Vec<usize>,
}

impl PartialEq for ElementSet {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members && FiniteGroup::same_as(&self.group, &other.group)
    }
}

impl Eq for ElementSet {}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.members.iter().map(|&m| self.group.label(m)))
            .finish()
    }
}

impl ElementSet {
    pub fn new(group: &GroupRef, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&m| m >= group.order()) {
            return Err(Error::InvalidArgument(format!(
                "element index {bad} out of range for a group of order {}",
                group.order()
            )));
        }
        members.sort_unstable();
        members.dedup();
        Ok(ElementSet {
            group: Arc::clone(group),
            members,
        })
    }

    pub fn from_labels<S: AsRef<str>>(group: &GroupRef, labels: &[S]) -> Result<Self> {
        let indices = labels
            .iter()
            .map(|l| {
                group
                    .index_of(l.as_ref())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown label {:?}", l.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(group, indices)
    }

    pub fn whole(group: &GroupRef) -> Self {
        ElementSet {
            group: Arc::clone(group),
            members: (0..group.order()).collect(),
        }
    }

    pub fn group(&self) -> &GroupRef {
        &self.group
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.binary_search(&g).is_ok()
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.members.iter().all(|&m| other.contains(m))
    }

    pub fn labels(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|&m| self.group.label(m).to_owned())
            .collect()
    }

    /// `{gh : g in self, h in other}`.
    pub fn product_set(&self, other: &ElementSet) -> Result<ElementSet> {
        if !FiniteGroup::same_as(&self.group, &other.group) {
            return Err(Error::GroupMismatch);
        }
        let mut hit = vec![false; self.group.order()];
        for &g in &self.members {
            for &h in &other.members {
                hit[self.group.mul(g, h)] = true;
            }
        }
        Ok(self.with_indicator(&hit))
    }

    pub fn union(&self, other: &ElementSet) -> Result<ElementSet> {
        if !FiniteGroup::same_as(&self.group, &other.group) {
            return Err(Error::GroupMismatch);
        }
        Self::new(&self.group, self.members.iter().chain(&other.members).copied())
    }

    /// Left coset `g * self`.
    pub fn left_coset(&self, g: usize) -> ElementSet {
        let mut hit = vec![false; self.group.order()];
        for &h in &self.members {
            hit[self.group.mul(g, h)] = true;
        }
        self.with_indicator(&hit)
    }

    /// True when the set contains the identity and is closed under products.
    pub fn is_subgroup(&self) -> bool {
        self.contains(self.group.identity())
            && self
                .members
                .iter()
                .all(|&a| self.members.iter().all(|&b| self.contains(self.group.mul(a, b))))
    }

    fn with_indicator(&self, hit: &[bool]) -> ElementSet {
        ElementSet {
            group: Arc::clone(&self.group),
            members: hit
                .iter()
                .enumerate()
                .filter_map(|(i, &h)| h.then_some(i))
                .collect(),
        }
    }
}

/// The subgroup generated by `seed`, computed by breadth-first closure over
/// the Cayley table.
///
/// In a finite group the monoid generated by a set is already a subgroup, so
/// closing `{e}` under right multiplication by the generators suffices.
pub fn generated_subgroup(seed: &ElementSet) -> Result<ElementSet> {
    if seed.is_empty() {
        return Err(Error::EmptySet);
    }
    let group = seed.group();
    let mut inside = vec![false; group.order()];
    let mut queue = VecDeque::new();
    inside[group.identity()] = true;
    queue.push_back(group.identity());
    while let Some(h) = queue.pop_front() {
        for &s in seed.members() {
            let next = group.mul(h, s);
            if !inside[next] {
                inside[next] = true;
                queue.push_back(next);
            }
        }
    }
    Ok(seed.with_indicator(&inside))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order_profile(g: &FiniteGroup) -> Vec<usize> {
        let mut orders: Vec<usize> = (0..g.order()).map(|a| g.element_order(a)).collect();
        orders.sort_unstable();
        orders
    }

    #[test]
    fn cyclic_basics() {
        let z1 = FiniteGroup::cyclic(1).unwrap();
        assert_eq!(z1.order(), 1);
        assert_eq!(z1.identity(), 0);

        let z12 = FiniteGroup::cyclic(12).unwrap();
        assert_eq!(z12.mul(3, 9), 0);
        assert_eq!(z12.inverse(4), 8);
        assert_eq!(z12.label(5), "t^5");

        assert!(FiniteGroup::cyclic(0).is_err());
    }

    #[test]
    fn cyclic_element_order_matches_repeated_addition() {
        let z10 = FiniteGroup::cyclic(10).unwrap();
        // count additions of 3 until we are back at 0
        let mut acc = 3;
        let mut steps = 1;
        while acc != 0 {
            acc = (acc + 3) % 10;
            steps += 1;
        }
        assert_eq!(steps, 10);
        assert_eq!(z10.element_order(3), steps);
        for k in 0..10 {
            assert_eq!(z10.element_order(k), 10 / num_integer::gcd(k, 10));
        }
    }

    #[test]
    fn dihedral_three_matches_symmetric_three() {
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let s3 = FiniteGroup::symmetric(3).unwrap();
        assert_eq!(d3.order(), 6);
        assert_eq!(s3.order(), 6);
        assert_eq!(order_profile(&d3), order_profile(&s3));
        let involutions = |g: &FiniteGroup| (0..g.order()).filter(|&a| g.element_order(a) == 2).count();
        assert_eq!(involutions(&d3), 3);
        assert_eq!(involutions(&s3), 3);
    }

    #[test]
    fn klein_four_from_product() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let v4 = FiniteGroup::direct_product(&z2, &z2).unwrap();
        assert_eq!(v4.order(), 4);
        for a in 0..4 {
            let expected = if a == v4.identity() { 1 } else { 2 };
            assert_eq!(v4.element_order(a), expected);
        }
    }

    #[test]
    fn symmetric_sizes_and_cap() {
        assert_eq!(FiniteGroup::symmetric(1).unwrap().order(), 1);
        assert_eq!(FiniteGroup::symmetric(4).unwrap().order(), 24);
        assert!(FiniteGroup::symmetric(7).is_err());
        let s3 = FiniteGroup::symmetric(3).unwrap();
        assert_eq!(s3.label(0), "e");
        assert!(s3.index_of("(12)").is_some());
        assert!(s3.index_of("(123)").is_some());
    }

    #[test]
    fn large_symmetric_group_uses_sampled_check() {
        let s6 = FiniteGroup::symmetric(6).unwrap();
        assert_eq!(s6.order(), 720);
        assert!(s6.validate().is_ok());
    }

    #[test]
    fn rejects_repeated_row_entry() {
        let table = vec![vec![0, 1, 2], vec![1, 1, 0], vec![2, 0, 1]];
        let labels = vec!["a".into(), "b".into(), "c".into()];
        assert!(matches!(
            FiniteGroup::from_cayley_table(table, labels),
            Err(Error::InvalidGroup(_))
        ));
    }

    #[test]
    fn rejects_missing_identity() {
        let table = vec![vec![0, 0], vec![1, 1]];
        let err = FiniteGroup::from_cayley_table(table, vec!["a".into(), "b".into()]).unwrap_err();
        assert!(err.to_string().contains("identity"), "{err}");
    }

    #[test]
    fn rejects_non_associative_latin_square() {
        // A loop of order 5 with identity 0 that is not a group.
        let table = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let labels = (0..5).map(|i| i.to_string()).collect();
        let err = FiniteGroup::from_cayley_table(table, labels).unwrap_err();
        assert!(err.to_string().contains("associativity"), "{err}");
    }

    #[test]
    fn csv_roundtrip_of_z3() {
        let csv = "a,b,c\nb,c,a\nc,a,b\na,b,c\n";
        let g = FiniteGroup::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(g.order(), 3);
        assert_eq!(g.label(g.identity()), "c");
        assert_eq!(g.element_order(g.index_of("a").unwrap()), 3);
    }

    #[test]
    fn subgroup_generation_in_small_groups() {
        let z12 = FiniteGroup::cyclic(12).unwrap();
        let seed = ElementSet::new(&z12, [4]).unwrap();
        assert_eq!(generated_subgroup(&seed).unwrap().members(), &[0, 4, 8]);

        let s3 = FiniteGroup::symmetric(3).unwrap();
        let one = ElementSet::from_labels(&s3, &["(12)"]).unwrap();
        assert_eq!(generated_subgroup(&one).unwrap().labels(), vec!["e", "(12)"]);
        let two = ElementSet::from_labels(&s3, &["(12)", "(13)"]).unwrap();
        assert_eq!(generated_subgroup(&two).unwrap().len(), 6);

        let empty = ElementSet::new(&s3, []).unwrap();
        assert_eq!(generated_subgroup(&empty), Err(Error::EmptySet));
    }

    #[test]
    fn subgroup_closure_is_idempotent_and_divides_order() {
        let d4 = FiniteGroup::dihedral(4).unwrap();
        for a in 0..d4.order() {
            for b in 0..d4.order() {
                let h = generated_subgroup(&ElementSet::new(&d4, [a, b]).unwrap()).unwrap();
                assert!(h.is_subgroup());
                assert_eq!(d4.order() % h.len(), 0);
                assert_eq!(generated_subgroup(&h).unwrap(), h);
            }
        }
    }
}
