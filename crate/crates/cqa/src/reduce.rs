//! The strong-cycle hardness gadget.
//!
//! Given a query whose attack graph has a mutual attack pair `F ⇄ G` with
//! `F → G` strong, every database over the two-atom query
//! `q0 = {R0(x;y), S0(y,z;x)}` maps to a database over the big query with
//! the same certain answer. Each variable of the big query falls into one
//! of six regions of the Venn diagram over K(F,q), K(G,q) and K⁺(F,q), and
//! a valuation θ over {x,y,z} is rewritten per region: a fixed constant,
//! θ(x) or θ(y) directly, or an injectively encoded pair/triple. The
//! rewriting sends repairs to repairs bijectively and preserves query
//! satisfaction both ways.

use std::collections::BTreeMap;
use std::fmt;

use crate::attack::{attack_graph, Strength};
use crate::db::{Fact, Repair, UncertainDatabase};
use crate::error::{Error, Result};
use crate::eval::{apply, Valuation};
use crate::purify::purify;
use crate::query::{parse_query, Atom, Constant, Query, Rel, Var};

/// The six region tags; each variable of the query gets exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Region {
    /// In K(F,q) ∩ K(G,q): the fixed constant `d`.
    BothClosures,
    /// In K(F,q) \ K(G,q): θ(x).
    FClosureOnly,
    /// In K(G,q) \ K⁺(F,q): the pair ⟨θ(y), θ(z)⟩.
    GBeyondFPlus,
    /// In (K(G,q) ∩ K⁺(F,q)) \ K(F,q): θ(y).
    GWithinFPlus,
    /// In K⁺(F,q) \ (K(F,q) ∪ K(G,q)): the pair ⟨θ(x), θ(y)⟩.
    FPlusResidue,
    /// Outside K⁺(F,q) ∪ K(G,q): the triple ⟨θ(x), θ(y), θ(z)⟩.
    Outside,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::BothClosures => "d",
            Region::FClosureOnly => "x",
            Region::GBeyondFPlus => "(y,z)",
            Region::GWithinFPlus => "y",
            Region::FPlusResidue => "(x,y)",
            Region::Outside => "(x,y,z)",
        };
        f.write_str(s)
    }
}

/// A valuation over the gadget variables x, y, z.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GadgetValuation {
    pub x: Constant,
    pub y: Constant,
    pub z: Constant,
}

fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        if matches!(c, '\\' | '(' | ')' | ',') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

/// Injective pair constant ⟨a,b⟩.
pub fn pair_constant(a: &Constant, b: &Constant) -> Constant {
    Constant::new(format!("p2({},{})", escape(&a.0), escape(&b.0)))
}

/// Injective triple constant ⟨a,b,c⟩.
pub fn triple_constant(a: &Constant, b: &Constant, c: &Constant) -> Constant {
    Constant::new(format!(
        "p3({},{},{})",
        escape(&a.0),
        escape(&b.0),
        escape(&c.0)
    ))
}

impl Region {
    pub fn value(&self, theta: &GadgetValuation) -> Constant {
        match self {
            Region::BothClosures => Constant::new("d"),
            Region::FClosureOnly => theta.x.clone(),
            Region::GBeyondFPlus => pair_constant(&theta.y, &theta.z),
            Region::GWithinFPlus => theta.y.clone(),
            Region::FPlusResidue => pair_constant(&theta.x, &theta.y),
            Region::Outside => triple_constant(&theta.x, &theta.y, &theta.z),
        }
    }
}

/// Region tags for every variable of a query, relative to a normalized
/// strong 2-cycle `(F, G)` with `F → G` strong.
#[derive(Debug, Clone)]
pub struct RegionAssignment {
    query: Query,
    f_idx: usize,
    g_idx: usize,
    regions: BTreeMap<Var, Region>,
}

impl RegionAssignment {
    /// Builds the assignment, normalizing the pair so the strong attack
    /// goes from `F` to `G`. Fails when the atoms do not form a 2-cycle
    /// with a strong attack.
    pub fn new(q: &Query, f: &Atom, g: &Atom) -> Result<Self> {
        let graph = attack_graph(q)?;
        let f_idx = q
            .index_of(f)
            .ok_or_else(|| Error::AtomNotInQuery(f.to_string()))?;
        let g_idx = q
            .index_of(g)
            .ok_or_else(|| Error::AtomNotInQuery(g.to_string()))?;
        if !(graph.attacks(f_idx, g_idx) && graph.attacks(g_idx, f_idx)) {
            return Err(Error::PreconditionViolated(format!(
                "{f} and {g} do not attack each other"
            )));
        }
        let (f_idx, g_idx) = if graph.strength(f_idx, g_idx) == Some(Strength::Strong) {
            (f_idx, g_idx)
        } else if graph.strength(g_idx, f_idx) == Some(Strength::Strong) {
            (g_idx, f_idx)
        } else {
            return Err(Error::PreconditionViolated(format!(
                "the 2-cycle between {f} and {g} is weak"
            )));
        };

        let kf = crate::query::key_closure_at(q, f_idx);
        let kg = crate::query::key_closure_at(q, g_idx);
        let kf_plus = crate::query::key_closure_plus_at(q, f_idx);
        let mut regions = BTreeMap::new();
        for u in q.vars() {
            let in_kf = kf.contains(&u);
            let in_kg = kg.contains(&u);
            let in_kf_plus = kf_plus.contains(&u);
            let region = if in_kf && in_kg {
                Region::BothClosures
            } else if in_kf {
                Region::FClosureOnly
            } else if in_kg && !in_kf_plus {
                Region::GBeyondFPlus
            } else if in_kg {
                Region::GWithinFPlus
            } else if in_kf_plus {
                Region::FPlusResidue
            } else {
                Region::Outside
            };
            regions.insert(u, region);
        }
        Ok(RegionAssignment {
            query: q.clone(),
            f_idx,
            g_idx,
            regions,
        })
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    /// The atom with the strong outgoing attack.
    pub fn f_atom(&self) -> &Atom {
        &self.query.atoms()[self.f_idx]
    }

    pub fn g_atom(&self) -> &Atom {
        &self.query.atoms()[self.g_idx]
    }

    pub fn region(&self, v: &Var) -> Option<Region> {
        self.regions.get(v).copied()
    }

    pub fn regions(&self) -> &BTreeMap<Var, Region> {
        &self.regions
    }

    /// rv(θ): the rewritten valuation over vars(q).
    pub fn rv(&self, theta: &GadgetValuation) -> Valuation {
        self.regions
            .iter()
            .map(|(v, region)| (v.clone(), region.value(theta)))
            .collect()
    }
}

/// The query `q0 = {R0(x;y), S0(y,z;x)}` the reduction starts from.
pub fn gadget_source_query() -> Query {
    parse_query("R0(x;y) & S0(y,z;x)").expect("fixed gadget query parses")
}

/// All valuations θ with θ(q0) contained in the database, sorted.
fn embeddings_of_q0(db0: &UncertainDatabase) -> Vec<GadgetValuation> {
    let mut out = Vec::new();
    for r_fact in db0.facts_of(&Rel::new("R0")) {
        let (x, y) = (&r_fact.key[0], &r_fact.nonkey[0]);
        for s_fact in db0.facts_of(&Rel::new("S0")) {
            if &s_fact.key[0] == y && &s_fact.nonkey[0] == x {
                out.push(GadgetValuation {
                    x: x.clone(),
                    y: y.clone(),
                    z: s_fact.key[1].clone(),
                });
            }
        }
    }
    out.sort();
    out
}

/// A computed reduction instance: everything needed to map repairs across.
#[derive(Debug, Clone)]
pub struct StrongCycleReduction {
    pub assignment: RegionAssignment,
    /// The input database, purified relative to q0.
    pub db0: UncertainDatabase,
    /// The embeddings of q0 into the purified input.
    pub valuations: Vec<GadgetValuation>,
    /// The reduced database over the big query's schema.
    pub output: UncertainDatabase,
    rest_facts: std::collections::BTreeSet<Fact>,
}

/// Builds the reduced database for a strong-2-cycle pair of `q`. `db0` must
/// use the schema `{R0: <2,1>, S0: <3,2>}`.
pub fn strong_cycle_reduce(
    db0: &UncertainDatabase,
    q: &Query,
    f: &Atom,
    g: &Atom,
) -> Result<StrongCycleReduction> {
    for (rel, arity, key_len) in [("R0", 2usize, 1usize), ("S0", 3, 2)] {
        if let Some(sig) = db0.schema().get(&Rel::new(rel)) {
            if sig.arity != arity || sig.key_len != key_len {
                return Err(Error::SchemaMismatch(format!(
                    "relation {rel} must have signature <{arity},{key_len}>"
                )));
            }
        }
    }
    if let Some(rel) = db0
        .schema()
        .keys()
        .find(|r| r.as_str() != "R0" && r.as_str() != "S0")
    {
        return Err(Error::SchemaMismatch(format!(
            "unexpected relation {rel} in the gadget input"
        )));
    }

    let assignment = RegionAssignment::new(q, f, g)?;
    let db0 = purify(db0, &gadget_source_query());
    let valuations = embeddings_of_q0(&db0);

    let mut output = UncertainDatabase::empty();
    for (rel, sig) in q.signatures() {
        output.declare(rel.clone(), *sig)?;
    }
    let mut rest_facts = std::collections::BTreeSet::new();
    for theta in &valuations {
        let rv = assignment.rv(theta);
        for atom in q.atoms() {
            let fact = apply(atom, &rv);
            if atom != assignment.f_atom() && atom != assignment.g_atom() {
                rest_facts.insert(fact.clone());
            }
            output.insert(fact)?;
        }
    }
    Ok(StrongCycleReduction {
        assignment,
        db0,
        valuations,
        output,
        rest_facts,
    })
}

impl StrongCycleReduction {
    /// Maps a repair of the purified input to a repair of the output: the
    /// images of the chosen R0 facts under F, the images of the chosen S0
    /// facts under G, and all remaining facts.
    pub fn map_repair(&self, r0: &Repair) -> Result<Repair> {
        if !r0.is_repair_of(&self.db0) {
            return Err(Error::PreconditionViolated(
                "input is not a repair of the purified gadget database".into(),
            ));
        }
        let mut facts = self.rest_facts.clone();
        for theta in &self.valuations {
            let rv = self.assignment.rv(theta);
            let r0_fact = Fact::new(
                Rel::new("R0"),
                vec![theta.x.clone()],
                vec![theta.y.clone()],
            );
            if r0.facts.contains(&r0_fact) {
                facts.insert(apply(self.assignment.f_atom(), &rv));
            }
            let s0_fact = Fact::new(
                Rel::new("S0"),
                vec![theta.y.clone(), theta.z.clone()],
                vec![theta.x.clone()],
            );
            if r0.facts.contains(&s0_fact) {
                facts.insert(apply(self.assignment.g_atom(), &rv));
            }
        }
        Ok(Repair { facts })
    }
}
