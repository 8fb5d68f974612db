//! 3-SAT as a filtered path ensemble: variables start fully mixed, clause
//! gates forbid unsatisfying assignments, and the posterior on the variable
//! layer is uniform over the solutions.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::gate::{Gate, Placement};
use super::layered::{ensemble_distribution, Layer, LayeredEnsemble, MAX_LAYER_WIDTH};
use crate::error::{Error, Result};

/// Clauses of exactly three nonzero DIMACS literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<[i32; 3]>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<[i32; 3]>) -> Result<Self> {
        for c in &clauses {
            for &l in c {
                if l == 0 || l.unsigned_abs() as usize > num_vars {
                    return Err(Error::Parse(format!("literal {l} out of range for {num_vars} variables")));
                }
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut lits = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(Error::Parse(format!("bad problem line {line:?}")));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
                header = Some((num(parts[1])?, num(parts[2])?));
                continue;
            }
            for tok in line.split_whitespace() {
                lits.push(tok.parse::<i32>().map_err(|e| Error::Parse(format!("{tok:?}: {e}")))?);
            }
        }
        let (num_vars, num_clauses) = header.ok_or_else(|| Error::Parse("missing 'p cnf' line".into()))?;
        let mut clauses = Vec::new();
        let mut cur = Vec::new();
        for l in lits {
            if l == 0 {
                if cur.len() != 3 {
                    return Err(Error::Parse(format!("clause {} has {} literals, need 3", clauses.len() + 1, cur.len())));
                }
                clauses.push([cur[0], cur[1], cur[2]]);
                cur.clear();
            } else {
                cur.push(l);
            }
        }
        if !cur.is_empty() {
            return Err(Error::Parse("last clause is not terminated by 0".into()));
        }
        if clauses.len() != num_clauses {
            return Err(Error::Parse(format!(
                "header declares {num_clauses} clauses, found {}",
                clauses.len()
            )));
        }
        Cnf::new(num_vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            s.push_str(&format!("{} {} {} 0\n", c[0], c[1], c[2]));
        }
        s
    }

    /// Assignment bit of variable `v` (1-based) is `(x >> (n - v)) & 1`,
    /// i.e. variable 1 is the most significant bit.
    pub fn satisfied_by(&self, x: usize) -> bool {
        let n = self.num_vars;
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let v = l.unsigned_abs() as usize;
                let b = (x >> (n - v)) & 1 == 1;
                b == (l > 0)
            })
        })
    }

    pub fn brute_force(&self) -> Vec<usize> {
        (0..1usize << self.num_vars).filter(|&x| self.satisfied_by(x)).collect()
    }
}

/// Clause filter on its distinct variables: identity restricted to
/// assignments that satisfy the clause (an OR3 with its output clamped to 1).
fn clause_placement(clause: &[i32; 3]) -> Result<Placement> {
    let mut vars: Vec<usize> = clause.iter().map(|l| l.unsigned_abs() as usize - 1).collect();
    vars.sort_unstable();
    vars.dedup();
    let k = vars.len();
    let or = Gate::or3();
    let matrix = (0..1usize << (2 * k))
        .map(|idx| {
            let (i, o) = (idx >> k, idx & ((1 << k) - 1));
            if i != o {
                return 0.0;
            }
            let lit_bits = clause.iter().fold(0, |acc, &l| {
                let pos = vars.iter().position(|&v| v + 1 == l.unsigned_abs() as usize).unwrap();
                let b = (i >> (k - 1 - pos)) & 1;
                (acc << 1) | (if l > 0 { b } else { 1 - b })
            });
            or.entry(lit_bits, 1)
        })
        .collect();
    Placement::new(Gate::new("CLAUSE", k, k, matrix)?, vars.clone(), vars)
}

fn mixing_layer(n: usize) -> Result<Layer> {
    let placements = (0..n)
        .map(|w| Placement::new(Gate::x(), vec![w], vec![w]))
        .collect::<Result<Vec<_>>>()?;
    Layer::new(n, n, placements)
}

/// Mixing layer then one filtering layer per clause, variables carried on
/// identity wires throughout.
pub fn sat_ensemble(cnf: &Cnf) -> Result<LayeredEnsemble> {
    let n = cnf.num_vars;
    if n == 0 || n > MAX_LAYER_WIDTH {
        return Err(Error::InvalidArgument(format!("need 1..={MAX_LAYER_WIDTH} variables, got {n}")));
    }
    let mut layers = vec![mixing_layer(n)?];
    for c in &cnf.clauses {
        let p = clause_placement(c)?;
        let mut placements = vec![p.clone()];
        for w in (0..n).filter(|w| !p.inputs.contains(w)) {
            placements.push(Placement::new(Gate::wire(None), vec![w], vec![w])?);
        }
        layers.push(Layer::new(n, n, placements)?);
    }
    LayeredEnsemble::new(vec![1.0; 1 << n], layers, vec![1.0; 1 << n])
}

/// Literal-level circuit: mixing, SPLIT fan-out to one wire per literal
/// occurrence, NOT on negated literals, one OR3 per clause, and the right
/// boundary clamped to all clause outputs true. Wide; for small instances.
pub fn sat_full_ensemble(cnf: &Cnf) -> Result<LayeredEnsemble> {
    let n = cnf.num_vars;
    let m = cnf.clauses.len();
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("need variables and clauses".into()));
    }
    let mut layers = vec![mixing_layer(n)?];
    // each wire carries the literal slots (3 * clause + position) it feeds
    let mut wires: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, c) in cnf.clauses.iter().enumerate() {
        for (t, &l) in c.iter().enumerate() {
            wires[l.unsigned_abs() as usize - 1].push(3 * ci + t);
        }
    }
    while wires.iter().any(|w| w.len() > 1) {
        let mut next = Vec::new();
        let mut placements = Vec::new();
        for (i, slots) in wires.iter().enumerate() {
            if slots.len() > 1 {
                let half = slots.len() / 2;
                placements.push(Placement::new(Gate::split(true), vec![i], vec![next.len(), next.len() + 1])?);
                next.push(slots[..half].to_vec());
                next.push(slots[half..].to_vec());
            } else {
                placements.push(Placement::new(Gate::wire(None), vec![i], vec![next.len()])?);
                next.push(slots.clone());
            }
        }
        layers.push(Layer::new(wires.len(), next.len(), placements)?);
        wires = next;
    }
    // literal layer: wire for slot s lands on position s; unused variables are summed out
    let mut placements = Vec::new();
    for (i, slots) in wires.iter().enumerate() {
        match slots.first() {
            Some(&s) => {
                let lit = cnf.clauses[s / 3][s % 3];
                let g = if lit > 0 { Gate::wire(None) } else { Gate::not() };
                placements.push(Placement::new(g, vec![i], vec![s])?);
            }
            None => placements.push(Placement::new(Gate::new("DISCARD", 1, 0, vec![1.0, 1.0])?, vec![i], vec![])?),
        }
    }
    layers.push(Layer::new(wires.len(), 3 * m, placements)?);
    let ors = (0..m)
        .map(|c| Placement::new(Gate::or3(), vec![3 * c, 3 * c + 1, 3 * c + 2], vec![c]))
        .collect::<Result<Vec<_>>>()?;
    layers.push(Layer::new(3 * m, m, ors)?);
    let mut psi_r = vec![0.0; 1 << m];
    psi_r[(1 << m) - 1] = 1.0;
    LayeredEnsemble::new(vec![1.0; 1 << n], layers, psi_r)
}

/// Posterior over assignments (variable 1 = most significant bit).
pub fn sat_posterior(cnf: &Cnf) -> Result<Vec<f64>> {
    let e = sat_ensemble(cnf)?;
    let m = ensemble_distribution(&e)?;
    Ok(m.layers[1].clone())
}

/// Random instance with exactly one solution: clauses over three distinct
/// variables that a hidden assignment satisfies are added until it is the
/// only one left.
pub fn random_unique_instance<R: Rng>(num_vars: usize, rng: &mut R) -> Cnf {
    assert!((3..=20).contains(&num_vars));
    let hidden = rng.random_range(0..1usize << num_vars);
    let mut cnf = Cnf {
        num_vars,
        clauses: Vec::new(),
    };
    let mut alive: Vec<usize> = (0..1usize << num_vars).collect();
    while alive.len() > 1 {
        let vars = sample_indices(rng, num_vars, 3);
        let clause = [0, 1, 2].map(|k| {
            let v = vars.index(k) as i32 + 1;
            if rng.random::<bool>() {
                v
            } else {
                -v
            }
        });
        let single = Cnf {
            num_vars,
            clauses: vec![clause],
        };
        if !single.satisfied_by(hidden) {
            continue;
        }
        let before = alive.len();
        alive.retain(|&x| single.satisfied_by(x));
        if alive.len() < before {
            cnf.clauses.push(clause);
        }
    }
    cnf
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np cnf 4 2\n1 -2 3 0\n-1 2\n4 0\n";
        let cnf = Cnf::parse_dimacs(text).unwrap();
        assert_eq!(cnf.clauses, vec![[1, -2, 3], [-1, 2, 4]]);
        assert_eq!(Cnf::parse_dimacs(&cnf.to_dimacs()).unwrap(), cnf);
        assert!(Cnf::parse_dimacs("p cnf 3 1\n1 2 0\n").is_err());
        assert!(Cnf::parse_dimacs("p cnf 3 1\n1 2 5 0\n").is_err());
        assert!(Cnf::parse_dimacs("p cnf 3 2\n1 2 3 0\n").is_err());
        assert!(Cnf::parse_dimacs("1 2 3 0\n").is_err());
    }

    #[test]
    fn posterior_is_uniform_over_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.random_range(3..=6);
            let clauses = (0..rng.random_range(1..=5))
                .map(|_| [0, 1, 2].map(|_| {
                    let v = rng.random_range(1..=n as i32);
                    if rng.random() { v } else { -v }
                }))
                .collect();
            let cnf = Cnf::new(n, clauses).unwrap();
            let sols = cnf.brute_force();
            let post = sat_posterior(&cnf).unwrap();
            for (x, &p) in post.iter().enumerate() {
                let expect = if sols.contains(&x) { 1.0 / sols.len() as f64 } else { 0.0 };
                assert!((p - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn literal_circuit_agrees_with_compact_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..6 {
            let n = rng.random_range(3..=4);
            let m = rng.random_range(1..=3);
            let clauses = (0..m)
                .map(|_| [0, 1, 2].map(|_| {
                    let v = rng.random_range(1..=n as i32);
                    if rng.random() { v } else { -v }
                }))
                .collect();
            let cnf = Cnf::new(n, clauses).unwrap();
            if cnf.brute_force().is_empty() {
                continue;
            }
            let full = ensemble_distribution(&sat_full_ensemble(&cnf).unwrap()).unwrap();
            let compact = sat_posterior(&cnf).unwrap();
            for (a, b) in full.layers[1].iter().zip(&compact) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unsatisfiable_is_empty() {
        let clauses = (0..8)
            .map(|s: i32| [1, 2, 3].map(|v| if s >> (v - 1) & 1 == 1 { v } else { -v }))
            .collect();
        let cnf = Cnf::new(3, clauses).unwrap();
        assert!(cnf.brute_force().is_empty());
        assert!(matches!(sat_posterior(&cnf), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn generator_yields_unique_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [3, 7, 10] {
            let cnf = random_unique_instance(n, &mut rng);
            assert_eq!(cnf.brute_force().len(), 1);
        }
    }
}
