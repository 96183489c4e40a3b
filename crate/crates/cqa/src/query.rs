//! Boolean conjunctive queries with primary keys.
//!
//! An atom `R(x,y;z)` has key terms before the `;` and non-key terms after
//! it; an atom without `;` is all-key. Variables are lower-case identifiers,
//! constants are quoted tokens or bare numerals. A query is a set of atoms
//! joined with `&`, e.g.
//!
//! ```text
//! R(u,'a';x) & S(y;x,z) & T(x;y) & P(x;z)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Relation name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rel(pub String);

/// Variable name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

/// Constant value. Constants are opaque tokens; queries and databases share
/// this type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constant(pub String);

impl Rel {
    pub fn new(s: impl Into<String>) -> Self {
        Rel(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Var {
    pub fn new(s: impl Into<String>) -> Self {
        Var(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Constant {
    pub fn new(s: impl Into<String>) -> Self {
        Constant(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A term is a variable or a constant. The namespaces are disjoint by
/// surface syntax: case and quoting decide, never position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Variable(Var),
    Constant(Constant),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Variable(Var::new(name))
    }
    pub fn constant(name: impl Into<String>) -> Self {
        Term::Constant(Constant::new(name))
    }
    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Variable(v) => Some(v),
            Term::Constant(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Variable(v) => write!(f, "{v}"),
            Term::Constant(c) => write!(f, "'{c}'"),
        }
    }
}

/// Relation signature: arity `n` and key length `k` with `n >= k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub arity: usize,
    pub key_len: usize,
}

impl Signature {
    pub fn new(arity: usize, key_len: usize) -> Option<Self> {
        if key_len >= 1 && arity >= key_len {
            Some(Signature { arity, key_len })
        } else {
            None
        }
    }

    /// A relation is all-key when every position belongs to the key.
    pub fn is_all_key(&self) -> bool {
        self.arity == self.key_len
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.arity, self.key_len)
    }
}

/// An atom `R(key_terms; nonkey_terms)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub rel: Rel,
    pub key: Vec<Term>,
    pub nonkey: Vec<Term>,
}

impl Atom {
    pub fn new(rel: Rel, key: Vec<Term>, nonkey: Vec<Term>) -> Self {
        Atom { rel, key, nonkey }
    }

    pub fn signature(&self) -> Signature {
        Signature {
            arity: self.key.len() + self.nonkey.len(),
            key_len: self.key.len(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.key.iter().chain(self.nonkey.iter())
    }

    /// key(F): variables among the key terms.
    pub fn key_vars(&self) -> BTreeSet<Var> {
        self.key.iter().filter_map(|t| t.as_var()).cloned().collect()
    }

    /// vars(F): variables among all terms.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms().filter_map(|t| t.as_var()).cloned().collect()
    }

    pub fn is_all_key(&self) -> bool {
        self.nonkey.is_empty()
    }

    pub fn is_ground(&self) -> bool {
        self.terms().all(|t| t.as_var().is_none())
    }

    /// Replaces every occurrence of `var` with the constant `c`.
    pub fn substitute(&self, var: &Var, c: &Constant) -> Atom {
        let sub = |ts: &[Term]| {
            ts.iter()
                .map(|t| match t {
                    Term::Variable(v) if v == var => Term::Constant(c.clone()),
                    other => other.clone(),
                })
                .collect()
        };
        Atom {
            rel: self.rel.clone(),
            key: sub(&self.key),
            nonkey: sub(&self.nonkey),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, t) in self.key.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        if !self.nonkey.is_empty() {
            write!(f, ";")?;
            for (i, t) in self.nonkey.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{t}")?;
            }
        }
        write!(f, ")")
    }
}

/// A Boolean conjunctive query: a set of atoms plus the signatures of the
/// relations they use. Atoms are kept sorted and deduplicated; the index of
/// an atom in [`Query::atoms`] is its identity throughout the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    atoms: Vec<Atom>,
    signatures: BTreeMap<Rel, Signature>,
}

impl Query {
    /// Builds a query from atoms, inferring signatures from the atom shapes.
    /// Later occurrences of a relation must agree with the first.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let mut signatures: BTreeMap<Rel, Signature> = BTreeMap::new();
        for a in &atoms {
            let sig = a.signature();
            if sig.key_len == 0 {
                return Err(Error::PreconditionViolated(format!(
                    "atom {a} has an empty key"
                )));
            }
            match signatures.get(&a.rel) {
                None => {
                    signatures.insert(a.rel.clone(), sig);
                }
                Some(prev) if *prev != sig => {
                    return Err(Error::SignatureConflict {
                        relation: a.rel.0.clone(),
                        arity: prev.arity,
                        key_len: prev.key_len,
                        found_arity: sig.arity,
                        found_key: sig.key_len,
                    });
                }
                Some(_) => {}
            }
        }
        let set: BTreeSet<Atom> = atoms.into_iter().collect();
        Ok(Query {
            atoms: set.into_iter().collect(),
            signatures,
        })
    }

    pub fn empty() -> Self {
        Query {
            atoms: Vec::new(),
            signatures: BTreeMap::new(),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn signatures(&self) -> &BTreeMap<Rel, Signature> {
        &self.signatures
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// vars(q): the variables occurring in the query.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.atoms.iter().flat_map(|a| a.vars()).collect()
    }

    /// The constants occurring in the query.
    pub fn constants(&self) -> BTreeSet<Constant> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms())
            .filter_map(|t| match t {
                Term::Constant(c) => Some(c.clone()),
                Term::Variable(_) => None,
            })
            .collect()
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    /// The atom of a relation, when the relation occurs exactly once.
    pub fn atom_of(&self, rel: &Rel) -> Option<&Atom> {
        let mut found = None;
        for a in &self.atoms {
            if &a.rel == rel {
                if found.is_some() {
                    return None;
                }
                found = Some(a);
            }
        }
        found
    }

    /// The query without the atom at `idx`. Signatures are re-inferred.
    pub fn without(&self, idx: usize) -> Query {
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, a)| a.clone())
            .collect();
        Query::new(atoms).expect("removing an atom preserves signature consistency")
    }

    /// Replaces `var` with `c` in every atom.
    pub fn substitute(&self, var: &Var, c: &Constant) -> Query {
        Query::new(self.atoms.iter().map(|a| a.substitute(var, c)).collect())
            .expect("substitution preserves signature consistency")
    }

    /// Replaces a sequence of variables with constants, pointwise.
    pub fn substitute_all(&self, vars: &[Var], consts: &[Constant]) -> Query {
        assert_eq!(vars.len(), consts.len());
        let mut q = self.clone();
        for (v, c) in vars.iter().zip(consts) {
            q = q.substitute(v, c);
        }
        q
    }

    /// Canonical text form; `parse_query(q.render())` reproduces `q`.
    pub fn render(&self) -> String {
        self.atoms
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            write!(f, "{{}}")
        } else {
            f.write_str(&self.render())
        }
    }
}

/// True iff some relation name occurs in two distinct atoms.
pub fn has_self_join(q: &Query) -> bool {
    let mut seen = BTreeSet::new();
    for a in q.atoms() {
        if !seen.insert(&a.rel) {
            return true;
        }
    }
    false
}

/// Returns the repeated relation name, if any.
pub fn self_join_relation(q: &Query) -> Option<Rel> {
    let mut seen = BTreeSet::new();
    for a in q.atoms() {
        if !seen.insert(a.rel.clone()) {
            return Some(a.rel.clone());
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        let consumed = &self.src[..self.pos];
        let line = consumed.matches('\n').count() + 1;
        let col = consumed
            .rsplit('\n')
            .next()
            .map(|l| l.chars().count())
            .unwrap_or(0)
            + 1;
        Error::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        let start = self.pos;
        match self.peek() {
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => self.pos += 1,
            _ => return None,
        }
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Some(&self.src[start..self.pos])
    }

    fn term(&mut self) -> Result<Term> {
        self.skip_ws();
        match self.peek() {
            Some(b'\'') => {
                self.pos += 1;
                let start = self.pos;
                while let Some(b) = self.peek() {
                    if b == b'\'' {
                        let text = &self.src[start..self.pos];
                        self.pos += 1;
                        return Ok(Term::constant(text));
                    }
                    self.pos += 1;
                }
                Err(self.error("unterminated quoted constant"))
            }
            Some(b) if b.is_ascii_digit() => {
                let start = self.pos;
                while let Some(b) = self.peek() {
                    if b.is_ascii_digit() {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Ok(Term::constant(&self.src[start..self.pos]))
            }
            Some(b) if b.is_ascii_lowercase() => {
                let name = self.ident().expect("peeked an identifier start");
                Ok(Term::var(name))
            }
            Some(_) => Err(self.error(
                "expected a term: a variable [a-z]..., a quoted constant, or a numeral",
            )),
            None => Err(self.error("expected a term, found end of input")),
        }
    }

    fn term_list(&mut self) -> Result<Vec<Term>> {
        let mut terms = vec![self.term()?];
        loop {
            self.skip_ws();
            if self.eat(b',') {
                terms.push(self.term()?);
            } else {
                return Ok(terms);
            }
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        self.skip_ws();
        let rel = match self.ident() {
            Some(name) => Rel::new(name),
            None => return Err(self.error("expected a relation name")),
        };
        self.skip_ws();
        self.expect(b'(')?;
        self.skip_ws();
        if self.peek() == Some(b')') {
            return Err(self.error("an atom needs at least one key term"));
        }
        let key = self.term_list()?;
        self.skip_ws();
        let nonkey = if self.eat(b';') {
            self.skip_ws();
            if self.peek() == Some(b')') {
                return Err(self.error(
                    "empty non-key list: write an all-key atom without the ';'",
                ));
            }
            self.term_list()?
        } else {
            Vec::new()
        };
        self.skip_ws();
        self.expect(b')')?;
        Ok(Atom::new(rel, key, nonkey))
    }

    fn query(&mut self) -> Result<Query> {
        self.skip_ws();
        if self.pos == self.bytes.len() {
            return Ok(Query::empty());
        }
        let mut atoms = vec![self.atom()?];
        loop {
            self.skip_ws();
            if self.eat(b'&') {
                atoms.push(self.atom()?);
            } else if self.pos == self.bytes.len() {
                return Query::new(atoms);
            } else {
                return Err(self.error("expected '&' or end of input"));
            }
        }
    }
}

/// Parses a query from its text form. The empty (all-whitespace) input is
/// the empty query.
pub fn parse_query(text: &str) -> Result<Query> {
    Parser::new(text).query()
}

// ---------------------------------------------------------------------------
// Functional dependencies
// ---------------------------------------------------------------------------

/// A functional dependency over variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fd {
    pub lhs: BTreeSet<Var>,
    pub rhs: BTreeSet<Var>,
}

impl fmt::Display for Fd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &BTreeSet<Var>| {
            s.iter()
                .map(|v| v.0.clone())
                .collect::<Vec<_>>()
                .join("")
        };
        write!(f, "{}->{}", side(&self.lhs), side(&self.rhs))
    }
}

/// The functional dependencies contributed by a query's atoms: one entry per
/// atom, `key(F) -> vars(F)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FdSet {
    pub deps: Vec<Fd>,
}

/// FD(q) = { key(F) -> vars(F) | F in q }.
pub fn fd_set(q: &Query) -> FdSet {
    FdSet {
        deps: q
            .atoms()
            .iter()
            .map(|a| Fd {
                lhs: a.key_vars(),
                rhs: a.vars(),
            })
            .collect(),
    }
}

/// Attribute closure of `start` under `fds`: the least fixpoint containing
/// `start` that is closed under every dependency.
pub fn attribute_closure(start: &BTreeSet<Var>, fds: &FdSet) -> BTreeSet<Var> {
    let mut closure = start.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for fd in &fds.deps {
            if fd.lhs.is_subset(&closure) && !fd.rhs.is_subset(&closure) {
                closure.extend(fd.rhs.iter().cloned());
                changed = true;
            }
        }
    }
    closure
}

/// K(F,q): the closure of key(F) under FD(q \ {F}).
pub fn key_closure(atom: &Atom, q: &Query) -> Result<BTreeSet<Var>> {
    let idx = q
        .index_of(atom)
        .ok_or_else(|| Error::AtomNotInQuery(atom.to_string()))?;
    Ok(key_closure_at(q, idx))
}

/// K+(F,q): the closure of key(F) under FD(q).
pub fn key_closure_plus(atom: &Atom, q: &Query) -> Result<BTreeSet<Var>> {
    let idx = q
        .index_of(atom)
        .ok_or_else(|| Error::AtomNotInQuery(atom.to_string()))?;
    Ok(key_closure_plus_at(q, idx))
}

pub(crate) fn key_closure_at(q: &Query, idx: usize) -> BTreeSet<Var> {
    attribute_closure(&q.atoms()[idx].key_vars(), &fd_set(&q.without(idx)))
}

pub(crate) fn key_closure_plus_at(q: &Query, idx: usize) -> BTreeSet<Var> {
    attribute_closure(&q.atoms()[idx].key_vars(), &fd_set(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn q1() -> Query {
        parse_query("R(u,'a';x) & S(y;x,z) & T(x;y) & P(x;z)").unwrap()
    }

    fn vars(names: &[&str]) -> BTreeSet<Var> {
        names.iter().map(|n| Var::new(*n)).collect()
    }

    #[test]
    fn parses_q1_signatures() {
        let q = q1();
        assert_eq!(q.len(), 4);
        let sig = |name: &str| q.signatures()[&Rel::new(name)];
        assert_eq!(sig("R"), Signature { arity: 3, key_len: 2 });
        assert_eq!(sig("S"), Signature { arity: 3, key_len: 1 });
        assert_eq!(sig("T"), Signature { arity: 2, key_len: 1 });
        assert_eq!(sig("P"), Signature { arity: 2, key_len: 1 });
    }

    #[test]
    fn empty_nonkey_list_is_an_error() {
        let err = parse_query("R('c';)").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn all_key_atom_has_no_separator() {
        let q = parse_query("R('c')").unwrap();
        assert_eq!(q.atoms()[0].signature(), Signature { arity: 1, key_len: 1 });
        assert!(q.atoms()[0].is_all_key());
    }

    #[test]
    fn self_join_parses_and_is_reported() {
        let q = parse_query("R(x;y) & R(y;x)").unwrap();
        assert!(has_self_join(&q));
        assert!(!has_self_join(&q1()));
        assert!(!has_self_join(&Query::empty()));
    }

    #[test]
    fn duplicate_atoms_collapse() {
        let q = parse_query("R(x;y) & R(x;y)").unwrap();
        assert_eq!(q.len(), 1);
        assert!(!has_self_join(&q));
    }

    #[test]
    fn signature_conflict_is_detected() {
        let err = parse_query("R(x;y) & R(x,y)").unwrap_err();
        assert!(matches!(err, Error::SignatureConflict { .. }), "{err}");
    }

    #[test]
    fn uppercase_term_is_rejected() {
        let err = parse_query("R(X;y)").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn render_round_trips() {
        let q = q1();
        assert_eq!(parse_query(&q.render()).unwrap(), q);
        assert_eq!(parse_query("").unwrap(), Query::empty());
        assert_eq!(Query::empty().render(), "");
    }

    #[test]
    fn fd_set_of_q1_minus_r() {
        let q = q1();
        let f = q.atom_of(&Rel::new("R")).unwrap().clone();
        let idx = q.index_of(&f).unwrap();
        let fds = fd_set(&q.without(idx));
        let expected: BTreeSet<Fd> = [
            Fd { lhs: vars(&["y"]), rhs: vars(&["x", "y", "z"]) },
            Fd { lhs: vars(&["x"]), rhs: vars(&["x", "y"]) },
            Fd { lhs: vars(&["x"]), rhs: vars(&["x", "z"]) },
        ]
        .into_iter()
        .collect();
        assert_eq!(fds.deps.iter().cloned().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn fd_set_edge_cases() {
        assert!(fd_set(&Query::empty()).deps.is_empty());
        let q = parse_query("R('a','b';x)").unwrap();
        let fds = fd_set(&q);
        assert_eq!(fds.deps.len(), 1);
        assert!(fds.deps[0].lhs.is_empty());
        assert_eq!(fds.deps[0].rhs, vars(&["x"]));
    }

    #[test]
    fn closures_match_worked_example() {
        let q = q1();
        let atom = |name: &str| q.atom_of(&Rel::new(name)).unwrap().clone();
        assert_eq!(key_closure(&atom("R"), &q).unwrap(), vars(&["u"]));
        assert_eq!(key_closure(&atom("S"), &q).unwrap(), vars(&["y"]));
        assert_eq!(key_closure(&atom("T"), &q).unwrap(), vars(&["x", "z"]));
        assert_eq!(key_closure(&atom("P"), &q).unwrap(), vars(&["x", "y", "z"]));

        assert_eq!(
            key_closure_plus(&atom("R"), &q).unwrap(),
            vars(&["u", "x", "y", "z"])
        );
        assert_eq!(key_closure_plus(&atom("S"), &q).unwrap(), vars(&["x", "y", "z"]));
        assert_eq!(key_closure_plus(&atom("T"), &q).unwrap(), vars(&["x", "y", "z"]));
        assert_eq!(key_closure_plus(&atom("P"), &q).unwrap(), vars(&["x", "y", "z"]));
    }

    #[test]
    fn closure_identity_without_dependencies() {
        let x = vars(&["x"]);
        assert_eq!(attribute_closure(&x, &FdSet::default()), x);
    }

    #[test]
    fn single_atom_closures() {
        let q = parse_query("R(x;y)").unwrap();
        let a = q.atoms()[0].clone();
        assert_eq!(key_closure(&a, &q).unwrap(), vars(&["x"]));
        assert_eq!(key_closure_plus(&a, &q).unwrap(), vars(&["x", "y"]));
    }

    #[test]
    fn atom_not_in_query_errors() {
        let q = q1();
        let other = parse_query("Z(w;v)").unwrap().atoms()[0].clone();
        assert!(matches!(
            key_closure(&other, &q),
            Err(Error::AtomNotInQuery(_))
        ));
    }
}
