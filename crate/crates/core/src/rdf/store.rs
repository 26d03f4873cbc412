use std::collections::{BTreeSet, HashMap};
use std::ops::RangeInclusive;

use super::term::{is_valid_iri, Term, Triple, TriplePattern};
use super::{lexical, RdfError};

/// Dense id assigned to a term by a [`TripleStore`] dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StoreStats {
    pub triple_count: usize,
    /// Distinct IRIs and blank nodes in subject or object position.
    pub node_count: usize,
    pub dict_size: usize,
}

/// In-memory triple set over an append-only term dictionary, indexed three ways
/// (SPO, POS, OSP) so that every bound/unbound combination is a range scan.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    spo: BTreeSet<[u32; 3]>,
    pos: BTreeSet<[u32; 3]>,
    osp: BTreeSet<[u32; 3]>,
}

fn prefix1(a: u32) -> RangeInclusive<[u32; 3]> {
    [a, 0, 0]..=[a, u32::MAX, u32::MAX]
}

fn prefix2(a: u32, b: u32) -> RangeInclusive<[u32; 3]> {
    [a, b, 0]..=[a, b, u32::MAX]
}

fn check_term(term: &Term) -> Result<(), RdfError> {
    match term {
        Term::Iri(iri) if !is_valid_iri(iri) => Err(RdfError::InvalidIri(iri.clone())),
        Term::Literal {
            lexical: lex,
            datatype,
        } => {
            if !is_valid_iri(datatype) {
                Err(RdfError::InvalidIri(datatype.clone()))
            } else if !lexical::is_valid(lex, datatype) {
                Err(RdfError::InvalidLiteral {
                    lexical: lex.clone(),
                    datatype: datatype.clone(),
                })
            } else {
                Ok(())
            }
        }
        Term::BlankNode(label) => Term::blank(label.as_str()).map(|_| ()),
        Term::Iri(_) => Ok(()),
    }
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Result<Self, RdfError> {
        let mut store = Self::new();
        for t in triples {
            store.insert(t)?;
        }
        Ok(store)
    }

    /// Returns the id of `term`, assigning the next dense id if it is new.
    pub fn intern(&mut self, term: Term) -> Result<TermId, RdfError> {
        if let Some(&id) = self.ids.get(&term) {
            return Ok(id);
        }
        check_term(&term)?;
        let raw = u32::try_from(self.terms.len()).map_err(|_| RdfError::DictionaryFull)?;
        let id = TermId(raw);
        self.terms.push(term.clone());
        self.ids.insert(term, id);
        Ok(id)
    }

    pub fn lookup(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn resolve(&self, id: TermId) -> &Term {
        &self.terms[id.index()]
    }

    pub fn insert(&mut self, triple: Triple) -> Result<bool, RdfError> {
        let Triple {
            subject,
            predicate,
            object,
        } = triple;
        if subject.is_literal() {
            return Err(RdfError::LiteralSubject(subject.to_string()));
        }
        if !predicate.is_iri() {
            return Err(RdfError::NonIriPredicate(predicate.to_string()));
        }
        let s = self.intern(subject)?;
        let p = self.intern(predicate)?;
        let o = self.intern(object)?;
        Ok(self.insert_ids(s, p, o))
    }

    /// Inserts a triple of already interned ids. The caller is responsible for
    /// the structural checks done by [`insert`](Self::insert).
    pub(crate) fn insert_ids(&mut self, s: TermId, p: TermId, o: TermId) -> bool {
        let (s, p, o) = (s.0, p.0, o.0);
        if !self.spo.insert([s, p, o]) {
            return false;
        }
        self.pos.insert([p, o, s]);
        self.osp.insert([o, s, p]);
        true
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        match (
            self.lookup(&triple.subject),
            self.lookup(&triple.predicate),
            self.lookup(&triple.object),
        ) {
            (Some(s), Some(p), Some(o)) => self.spo.contains(&[s.0, p.0, o.0]),
            _ => false,
        }
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn dict_len(&self) -> usize {
        self.terms.len()
    }

    /// Id-level pattern match; results are `[s, p, o]` in the order of the
    /// index that serves the pattern.
    pub fn match_ids(
        &self,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
    ) -> Box<dyn Iterator<Item = [TermId; 3]> + '_> {
        let spo = |k: &[u32; 3]| [TermId(k[0]), TermId(k[1]), TermId(k[2])];
        let pos = |k: &[u32; 3]| [TermId(k[2]), TermId(k[0]), TermId(k[1])];
        let osp = |k: &[u32; 3]| [TermId(k[1]), TermId(k[2]), TermId(k[0])];
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                let hit = self.spo.contains(&[s.0, p.0, o.0]);
                Box::new(hit.then_some([s, p, o]).into_iter())
            }
            (Some(s), Some(p), None) => Box::new(self.spo.range(prefix2(s.0, p.0)).map(spo)),
            (Some(s), None, None) => Box::new(self.spo.range(prefix1(s.0)).map(spo)),
            (Some(s), None, Some(o)) => Box::new(self.osp.range(prefix2(o.0, s.0)).map(osp)),
            (None, Some(p), Some(o)) => Box::new(self.pos.range(prefix2(p.0, o.0)).map(pos)),
            (None, Some(p), None) => Box::new(self.pos.range(prefix1(p.0)).map(pos)),
            (None, None, Some(o)) => Box::new(self.osp.range(prefix1(o.0)).map(osp)),
            (None, None, None) => Box::new(self.spo.iter().map(spo)),
        }
    }

    /// Term-level pattern match. A bound term that was never interned matches
    /// nothing.
    pub fn matches<'a>(&'a self, pattern: &TriplePattern) -> Box<dyn Iterator<Item = Triple> + 'a> {
        let mut bound = [None; 3];
        for (slot, term) in
            bound
                .iter_mut()
                .zip([&pattern.subject, &pattern.predicate, &pattern.object])
        {
            if let Some(term) = term {
                match self.lookup(term) {
                    Some(id) => *slot = Some(id),
                    None => return Box::new(std::iter::empty()),
                }
            }
        }
        Box::new(
            self.match_ids(bound[0], bound[1], bound[2])
                .map(move |ids| self.decode(ids)),
        )
    }

    pub fn decode(&self, [s, p, o]: [TermId; 3]) -> Triple {
        Triple {
            subject: self.resolve(s).clone(),
            predicate: self.resolve(p).clone(),
            object: self.resolve(o).clone(),
        }
    }

    /// All triples in (S, P, O) id order.
    pub fn iter_ids(&self) -> impl Iterator<Item = [TermId; 3]> + '_ {
        self.spo
            .iter()
            .map(|k| [TermId(k[0]), TermId(k[1]), TermId(k[2])])
    }

    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.iter_ids().map(|ids| self.decode(ids))
    }

    pub fn stats(&self) -> StoreStats {
        let mut seen = vec![false; self.terms.len()];
        let mut nodes = 0;
        for [s, _, o] in self.iter_ids() {
            for id in [s, o] {
                if !seen[id.index()] && !self.resolve(id).is_literal() {
                    seen[id.index()] = true;
                    nodes += 1;
                }
            }
        }
        StoreStats {
            triple_count: self.len(),
            node_count: nodes,
            dict_size: self.dict_len(),
        }
    }

    #[cfg(test)]
    pub(crate) fn indexes_agree(&self) -> bool {
        let from_pos: BTreeSet<[u32; 3]> = self.pos.iter().map(|k| [k[2], k[0], k[1]]).collect();
        let from_osp: BTreeSet<[u32; 3]> = self.osp.iter().map(|k| [k[1], k[2], k[0]]).collect();
        from_pos == self.spo && from_osp == self.spo
    }
}

/// Two stores hold the same graph when their decoded triple sets are equal,
/// regardless of id assignment.
impl PartialEq for TripleStore {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().all(|t| other.contains(&t))
    }
}
