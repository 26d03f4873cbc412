use oda_core::rdf::{Term, Triple, TripleStore};
use oda_core::sparql::{evaluate_with, parse_query, run_query, EvalOptions, SparqlError, Value};
use oda_core::vocab::{hpc, RDF_TYPE};
use proptest::prelude::*;

const SYSTEM_AVG_RUNTIME: &str = r#"PREFIX hpc: <http://ontology.hpc.org/>
PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>

SELECT ?hpcSystem ?systemName (AVG(?execTimeSeconds) AS ?avgExecutionTimeSeconds)
WHERE {
  ?hpcSystem a hpc:HPCSystem ;
             hpc:systemName ?systemName ;
             hpc:hasRack ?rack .
  ?rack hpc:hasComputeNode ?computeNode .
  ?job hpc:usesComputeNode ?computeNode ;
       hpc:hasJobStartTime ?startTime ;
       hpc:hasJobEndTime ?endTime .
  ?startTime hpc:timestamp ?startTimestamp .
  ?endTime hpc:timestamp ?endTimestamp .

  BIND(
    ( xsd:dateTime(?endTimestamp) - xsd:dateTime(?startTimestamp) ) * 86400 AS ?execTimeSeconds
  )
}
GROUP BY ?hpcSystem ?systemName
ORDER BY ?hpcSystem
"#;

fn iri(local: &str) -> Term {
    Term::iri(format!("http://ex.org/{local}")).unwrap()
}

fn t(s: Term, p: &str, o: Term) -> Triple {
    let p = if p == "a" {
        RDF_TYPE.to_owned()
    } else {
        hpc(p)
    };
    Triple::new(s, Term::iri(p).unwrap(), o).unwrap()
}

/// Two systems with one node each; A runs jobs of 100 s and 200 s, B one of 50 s.
fn two_systems() -> TripleStore {
    let mut triples = Vec::new();
    for (sys, name) in [("A", "alpha"), ("B", "beta")] {
        triples.push(t(iri(sys), "a", Term::iri(hpc("HPCSystem")).unwrap()));
        triples.push(t(iri(sys), "systemName", Term::string(name)));
        triples.push(t(iri(sys), "hasRack", iri(&format!("{sys}r"))));
        triples.push(t(
            iri(&format!("{sys}r")),
            "hasComputeNode",
            iri(&format!("{sys}n")),
        ));
    }
    for (job, sys, start, len) in [
        ("j1", "A", 1_000, 100),
        ("j2", "A", 5_000, 200),
        ("j3", "B", 1_000, 50),
    ] {
        let j = iri(job);
        triples.push(t(j.clone(), "usesComputeNode", iri(&format!("{sys}n"))));
        triples.push(t(
            j.clone(),
            "hasJobStartTime",
            Term::blank(format!("{job}s")).unwrap(),
        ));
        triples.push(t(
            j,
            "hasJobEndTime",
            Term::blank(format!("{job}e")).unwrap(),
        ));
        triples.push(t(
            Term::blank(format!("{job}s")).unwrap(),
            "timestamp",
            Term::integer(start),
        ));
        triples.push(t(
            Term::blank(format!("{job}e")).unwrap(),
            "timestamp",
            Term::integer(start + len),
        ));
    }
    TripleStore::from_triples(triples).unwrap()
}

#[test]
fn average_runtime_per_system() {
    let table = run_query(&two_systems(), SYSTEM_AVG_RUNTIME).unwrap();
    assert_eq!(
        table.columns,
        ["hpcSystem", "systemName", "avgExecutionTimeSeconds"]
    );
    let rows = table.lexical_rows();
    assert_eq!(
        rows,
        vec![
            vec!["http://ex.org/A".to_owned(), "alpha".into(), "150.0".into()],
            vec!["http://ex.org/B".to_owned(), "beta".into(), "50.0".into()],
        ]
    );
    // Exact arithmetic: 150 is an exact decimal, not a rounded double.
    assert_eq!(
        table.get(0, "avgExecutionTimeSeconds").unwrap().as_f64(),
        Some(150.0)
    );
}

#[test]
fn empty_store_keeps_header() {
    let table = run_query(&TripleStore::new(), SYSTEM_AVG_RUNTIME).unwrap();
    assert!(table.is_empty());
    assert_eq!(
        table.to_csv(),
        "hpcSystem,systemName,avgExecutionTimeSeconds\n"
    );
}

#[test]
fn implicit_group_over_nothing() {
    let q = "PREFIX hpc: <http://ontology.hpc.org/> SELECT (COUNT(?j) AS ?n) (SUM(?x) AS ?s) (MAX(?x) AS ?m) \
             WHERE { ?j hpc:nothing ?x }";
    let table = run_query(&two_systems(), q).unwrap();
    assert_eq!(
        table.rows,
        vec![vec![Some(Value::Integer(0)), Some(Value::Integer(0)), None]]
    );
}

#[test]
fn filters_having_and_modifiers() {
    let store = two_systems();
    let q = r#"PREFIX hpc: <http://ontology.hpc.org/>
        SELECT ?sys (COUNT(?job) AS ?jobs) WHERE {
          ?sys hpc:hasRack ?r . ?r hpc:hasComputeNode ?n . ?job hpc:usesComputeNode ?n .
        } GROUP BY ?sys HAVING (COUNT(?job) > 1)"#;
    let table = run_query(&store, q).unwrap();
    assert_eq!(
        table.lexical_rows(),
        vec![vec!["http://ex.org/A".to_owned(), "2".into()]]
    );

    let q = r#"PREFIX hpc: <http://ontology.hpc.org/>
        SELECT DISTINCT ?ts WHERE { ?x hpc:timestamp ?ts FILTER(?ts >= 1000 && ?ts < 5000) }
        ORDER BY DESC(?ts) LIMIT 2 OFFSET 1"#;
    let table = run_query(&store, q).unwrap();
    assert_eq!(
        table.lexical_rows(),
        vec![vec!["1050".to_owned()], vec!["1000".into()]]
    );
}

#[test]
fn bind_result_joins_later_patterns() {
    let store = two_systems();
    let q = r#"PREFIX hpc: <http://ontology.hpc.org/>
        SELECT ?e WHERE { BIND(1100 AS ?v) ?e hpc:timestamp ?v }"#;
    let table = run_query(&store, q).unwrap();
    assert_eq!(table.lexical_rows(), vec![vec!["_:j1e".to_owned()]]);
}

#[test]
fn errors_are_typed() {
    let store = TripleStore::new();
    assert!(matches!(
        run_query(&store, "SELECT ?s WHERE { ?s ?p }"),
        Err(SparqlError::Syntax { .. })
    ));
    assert!(matches!(
        run_query(&store, "SELECT ?s WHERE { ?s ?p ?o MINUS { ?s ?p ?o } }"),
        Err(SparqlError::Unsupported(_))
    ));
}

fn small_graph() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
    prop::collection::vec((0u8..6, 0u8..3, 0u8..6), 0..40)
}

proptest! {
    #[test]
    fn join_order_does_not_change_results(edges in small_graph(), rotate in 0usize..3) {
        let triples = edges.iter().map(|&(s, p, o)| {
            Triple::new(iri(&format!("n{s}")), iri(&format!("p{p}")), iri(&format!("n{o}"))).unwrap()
        });
        let store = TripleStore::from_triples(triples).unwrap();
        let mut patterns = [
            "?a <http://ex.org/p0> ?b .",
            "?b <http://ex.org/p1> ?c .",
            "?c ?p ?a .",
        ];
        patterns.rotate_left(rotate);
        let q = format!("SELECT ?a ?b ?c ?p WHERE {{ {} FILTER(?a != ?c) }}", patterns.join(" "));
        let ast = parse_query(&q).unwrap();
        let mut planned = evaluate_with(&ast, &store, EvalOptions::default()).lexical_rows();
        let mut written = evaluate_with(&ast, &store, EvalOptions { reorder: false }).lexical_rows();
        planned.sort();
        written.sort();
        prop_assert_eq!(&planned, &written);

        // Independent nested-loop oracle.
        let mut oracle = Vec::new();
        for &(a, p0, b) in &edges {
            for &(b2, p1, c) in &edges {
                for &(c2, p, a2) in &edges {
                    if p0 == 0 && p1 == 1 && b2 == b && c2 == c && a2 == a && a != c {
                        oracle.push(vec![
                            format!("http://ex.org/n{a}"),
                            format!("http://ex.org/n{b}"),
                            format!("http://ex.org/n{c}"),
                            format!("http://ex.org/p{p}"),
                        ]);
                    }
                }
            }
        }
        oracle.sort();
        oracle.dedup();
        prop_assert_eq!(planned, oracle);
    }
}
