//! Exact two-level boolean minimization: prime implicants by iterative
//! merging, then a cover from essential implicants plus greedy set cover.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::{DnfFormula, Literal, Minterm};

/// Result of [`simplify`]; `skipped` is set when the variable count exceeded
/// the limit and the input was returned unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifyOutcome {
    pub formula: DnfFormula,
    pub skipped: bool,
}

/// Implicant over the compacted variable positions: `bits` holds the values
/// of the determined positions, `care` marks which positions are determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cube {
    bits: u64,
    care: u64,
}

impl Cube {
    #[inline]
    fn covers(&self, minterm: u64) -> bool {
        minterm & self.care == self.bits
    }
}

/// Logically equivalent minimal DNF of the input, treating assignments not
/// listed by the formula as false (no don't-cares).
///
/// Formulas over more than `var_limit` distinct concepts are returned
/// unchanged with the skipped flag set, since the algorithm is exponential.
/// The result never has more terms or more literal occurrences than the
/// input; if the cover search ever produced one, the input wins.
pub fn simplify(formula: &DnfFormula, var_limit: usize) -> SimplifyOutcome {
    if formula.as_constant().is_some() {
        return SimplifyOutcome {
            formula: formula.clone(),
            skipped: false,
        };
    }

    // Compact the mentioned concepts into bit positions.
    let mut vars: Vec<usize> = formula
        .terms()
        .iter()
        .flat_map(|t| t.literals().iter().map(|l| l.concept_index))
        .collect();
    vars.sort_unstable();
    vars.dedup();
    let m = vars.len();
    if m > var_limit || m > 63 {
        return SimplifyOutcome {
            formula: formula.clone(),
            skipped: true,
        };
    }
    let mut names: BTreeMap<usize, String> = BTreeMap::new();
    for t in formula.terms() {
        for l in t.literals() {
            names.entry(l.concept_index).or_insert_with(|| l.concept_name.clone());
        }
    }
    let position: BTreeMap<usize, usize> =
        vars.iter().enumerate().map(|(p, &v)| (v, p)).collect();

    // Expand every term into full minterms over the variable set.
    let mut minterms: BTreeSet<u64> = BTreeSet::new();
    for term in formula.terms() {
        let mut bits = 0u64;
        let mut care = 0u64;
        for l in term.literals() {
            let p = position[&l.concept_index];
            care |= 1 << p;
            if !l.negated {
                bits |= 1 << p;
            }
        }
        let free: Vec<usize> = (0..m).filter(|p| care >> p & 1 == 0).collect();
        for combo in 0..(1u64 << free.len()) {
            let mut full = bits;
            for (fi, &p) in free.iter().enumerate() {
                if combo >> fi & 1 == 1 {
                    full |= 1 << p;
                }
            }
            minterms.insert(full);
        }
    }

    if minterms.len() == 1usize << m {
        return SimplifyOutcome {
            formula: DnfFormula::true_formula(formula.class_index),
            skipped: false,
        };
    }

    let primes = prime_implicants(&minterms, m);
    let cover = minimal_cover(&minterms, &primes);
    let candidate = cubes_to_formula(formula.class_index, &cover, &vars, &names, formula);

    // Equivalent either way; keep whichever is smaller.
    if candidate.literal_count() > formula.literal_count()
        || candidate.term_count() > formula.term_count()
    {
        return SimplifyOutcome {
            formula: formula.clone(),
            skipped: false,
        };
    }
    SimplifyOutcome {
        formula: candidate,
        skipped: false,
    }
}

/// Classic merging pass: cubes with identical care masks whose bits differ
/// in exactly one position combine; anything never combined is prime.
fn prime_implicants(minterms: &BTreeSet<u64>, m: usize) -> Vec<Cube> {
    let full_care = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let mut current: BTreeSet<Cube> = minterms
        .iter()
        .map(|&bits| Cube { bits, care: full_care })
        .collect();
    let mut primes: BTreeSet<Cube> = BTreeSet::new();

    while !current.is_empty() {
        // Group by care mask and popcount so only neighbours are compared.
        let mut groups: BTreeMap<(u64, u32), Vec<Cube>> = BTreeMap::new();
        for &cube in &current {
            groups
                .entry((cube.care, cube.bits.count_ones()))
                .or_default()
                .push(cube);
        }
        let mut merged: BTreeSet<Cube> = BTreeSet::new();
        let mut next: BTreeSet<Cube> = BTreeSet::new();
        for (&(care, ones), cubes) in &groups {
            if let Some(upper) = groups.get(&(care, ones + 1)) {
                for &a in cubes {
                    for &b in upper {
                        let diff = a.bits ^ b.bits;
                        if diff.count_ones() == 1 {
                            merged.insert(a);
                            merged.insert(b);
                            next.insert(Cube {
                                bits: a.bits & !diff,
                                care: care & !diff,
                            });
                        }
                    }
                }
            }
        }
        for cube in current {
            if !merged.contains(&cube) {
                primes.insert(cube);
            }
        }
        current = next;
    }
    primes.into_iter().collect()
}

/// Essential primes first, then greedy set cover over what remains.
fn minimal_cover(minterms: &BTreeSet<u64>, primes: &[Cube]) -> Vec<Cube> {
    let targets: Vec<u64> = minterms.iter().copied().collect();
    let mut covered = alloc::vec![false; targets.len()];
    let mut chosen: Vec<Cube> = Vec::new();

    // Essential: sole cover of some minterm.
    for (ti, &t) in targets.iter().enumerate() {
        let covering: Vec<&Cube> = primes.iter().filter(|c| c.covers(t)).collect();
        if covering.len() == 1 {
            let essential = *covering[0];
            if !chosen.contains(&essential) {
                chosen.push(essential);
                for (tj, &u) in targets.iter().enumerate() {
                    if essential.covers(u) {
                        covered[tj] = true;
                    }
                }
            } else {
                covered[ti] = true;
            }
        }
    }

    while covered.iter().any(|&c| !c) {
        // Most new coverage wins; ties prefer fewer literals, then the
        // smallest cube in (care, bits) order.
        let mut best: Option<(usize, u32, Cube)> = None;
        for &prime in primes {
            if chosen.contains(&prime) {
                continue;
            }
            let gain = targets
                .iter()
                .enumerate()
                .filter(|&(ti, &t)| !covered[ti] && prime.covers(t))
                .count();
            if gain == 0 {
                continue;
            }
            let lits = prime.care.count_ones();
            let better = match &best {
                None => true,
                Some((bg, bl, bc)) => {
                    gain > *bg
                        || (gain == *bg && lits < *bl)
                        || (gain == *bg && lits == *bl && (prime.care, prime.bits) < (bc.care, bc.bits))
                }
            };
            if better {
                best = Some((gain, lits, prime));
            }
        }
        let (_, _, pick) = best.expect("primes cover every minterm");
        chosen.push(pick);
        for (ti, &t) in targets.iter().enumerate() {
            if pick.covers(t) {
                covered[ti] = true;
            }
        }
    }
    chosen
}

fn cubes_to_formula(
    class_index: usize,
    cover: &[Cube],
    vars: &[usize],
    names: &BTreeMap<usize, String>,
    original: &DnfFormula,
) -> DnfFormula {
    let mut terms: Vec<Minterm> = Vec::with_capacity(cover.len());
    for cube in cover {
        let mut literals = Vec::new();
        for (p, &concept) in vars.iter().enumerate() {
            if cube.care >> p & 1 == 1 {
                let negated = cube.bits >> p & 1 == 0;
                literals.push(Literal::new(concept, names[&concept].clone(), negated));
            }
        }
        terms.push(
            Minterm::new(literals)
                .expect("cover cubes determine at least one variable")
                .with_support(0),
        );
    }

    // Attribute each original term's support to the first covering output
    // term so the support mass is partitioned, not duplicated.
    for source in original.terms() {
        for term in &mut terms {
            if subsumes(term, source) {
                term.support += source.support;
                break;
            }
        }
    }
    terms.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| a.signature().cmp(&b.signature()))
    });
    DnfFormula::from_terms(class_index, terms)
}

/// Whether `general` covers every assignment satisfying `specific`
/// (cube containment: the general term's literals are a subset).
fn subsumes(general: &Minterm, specific: &Minterm) -> bool {
    general
        .literals()
        .iter()
        .all(|gl| specific.literals().iter().any(|sl| sl == gl))
}
