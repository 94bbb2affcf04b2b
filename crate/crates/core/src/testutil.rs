//! Fixtures shared by unit tests.

pub(crate) const FIG1: &str = r#"
# publications query
query icdm {
  vertex a: Author;
  vertex p1: Paper(venue = "ICDM", year = 2006);
  vertex p2: Paper(venue = "ICDM", year = 2007);
  vertex p3: Paper(year >= 2008);
  edge e1: a -authored-> p1 order 1;
  edge e2: a -authored-> p2 order 2;
  edge e3: a -authored-> p3 order 3;
}
"#;
