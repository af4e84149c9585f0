//! Textual policy syntax.
//!
//! ```text
//! operations: {addScore, readScore}
//! rule: position in {faculty}; type in {gradebook}; {readScore}; crsTaught contains crs
//! rule: crsTaught supseteqin {{cs601}}; true; {addScore}; true
//! ```
//!
//! A rule lists its UAE, RAE, operations and constraint separated by `;`.
//! Conjuncts and atomic constraints are joined by `and`; `true` is the empty
//! conjunction. Single-valued conjuncts are `a in {v, ...}`, multi-valued user
//! conjuncts `a supseteqin {{v, ...}, ...}` and multi-valued resource
//! conjuncts `a in {{v, ...}, ...}`. Constraints are `a supseteq b`,
//! `a contains b` and `a = b`, user attribute first. `#` starts a comment
//! line.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::abac::{AtomicConstraint, AttrExpr, Conjunct, Rule, Side};
use crate::error::{Error, Result};

const KEYWORDS: [&str; 8] = ["true", "and", "in", "supseteq", "supseteqin", "contains", "rule", "operations"];

fn is_bare(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_alphanumeric() || "_-.:/@+".contains(c))
        && !KEYWORDS.contains(&s)
}

/// Writes a name or value, quoting it when it is not a plain identifier.
pub fn quote(s: &str) -> String {
    if is_bare(s) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn atoms_to_string(s: &BTreeSet<String>) -> String {
    let items: Vec<String> = s.iter().map(|v| quote(v)).collect();
    format!("{{{}}}", items.join(", "))
}

fn expr_to_string(e: &AttrExpr, side: Side) -> String {
    if e.is_top() {
        return "true".into();
    }
    let parts: Vec<String> = e
        .iter()
        .map(|(a, c)| match c {
            Conjunct::Atoms(s) => format!("{} in {}", quote(a), atoms_to_string(s)),
            Conjunct::Sets(ss) => {
                let op = if side == Side::User { "supseteqin" } else { "in" };
                let items: Vec<String> = ss.iter().map(atoms_to_string).collect();
                format!("{} {op} {{{}}}", quote(a), items.join(", "))
            }
        })
        .collect();
    parts.join(" and ")
}

fn constraint_to_string(f: &AtomicConstraint) -> String {
    let op = match f {
        AtomicConstraint::SupersetEq { .. } => "supseteq",
        AtomicConstraint::Contains { .. } => "contains",
        AtomicConstraint::Equal { .. } => "=",
    };
    format!("{} {op} {}", quote(f.user_attr()), quote(f.res_attr()))
}

/// Canonical one-line form of a rule, without the `rule:` prefix.
pub fn rule_to_string(r: &Rule) -> String {
    let con = if r.con.is_empty() {
        "true".to_string()
    } else {
        r.con.iter().map(constraint_to_string).collect::<Vec<_>>().join(" and ")
    };
    format!(
        "{}; {}; {}; {}",
        expr_to_string(&r.uae, Side::User),
        expr_to_string(&r.rae, Side::Resource),
        atoms_to_string(&r.ops),
        con
    )
}

/// Rules and (optionally) the operation set read from a policy file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolicyText {
    pub operations: Option<BTreeSet<String>>,
    pub rules: Vec<Rule>,
}

/// Prints a policy: the operation line, then rules in canonical order.
pub fn print_policy(operations: &BTreeSet<String>, rules: &[Rule]) -> String {
    let mut lines: Vec<String> = rules.iter().map(rule_to_string).collect();
    lines.sort();
    lines.dedup();
    let mut out = String::new();
    let _ = writeln!(out, "operations: {}", atoms_to_string(operations));
    for l in lines {
        let _ = writeln!(out, "rule: {l}");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Eq,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

fn lex(src: &str, line: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: &str| Error::Parse {
        line,
        column: col,
        message: msg.to_string(),
    };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '{' => {
                out.push((Tok::LBrace, col));
                i += 1;
            }
            '}' => {
                out.push((Tok::RBrace, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            ';' => {
                out.push((Tok::Semi, col));
                i += 1;
            }
            '=' => {
                out.push((Tok::Eq, col));
                i += 1;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(col, "unterminated string")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                _ => return Err(err(i + 1, "invalid escape")),
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((Tok::Quoted(s), col));
            }
            ':' if matches!(out.as_slice(), [(Tok::Word(w), _)] if w == "rule" || w == "operations") => {
                out.push((Tok::Colon, col));
                i += 1;
            }
            c if c.is_alphanumeric() || "_-.:/@+".contains(c) => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || "_-.:/@+".contains(chars[i])) {
                    i += 1;
                }
                let w: String = chars[start..i].iter().collect();
                // `rule:` and `operations:` lex as a word followed by a colon.
                if out.is_empty() && (w == "rule:" || w == "operations:") {
                    out.push((Tok::Word(w[..w.len() - 1].to_string()), col));
                    out.push((Tok::Colon, col + w.len() - 1));
                } else {
                    out.push((Tok::Word(w), col));
                }
            }
            _ => return Err(err(col, &format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

impl Lexer {
    fn new(src: &str, line: usize) -> Result<Self> {
        Ok(Lexer {
            toks: lex(src, line)?,
            pos: 0,
            line,
            end_col: src.chars().count() + 1,
        })
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line,
            column: self.col(),
            message: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w == kw)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.peek_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    /// A name or value: a non-keyword word or a quoted string.
    fn name(&mut self, what: &str) -> Result<String> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) if !KEYWORDS.contains(&w.as_str()) => {
                self.pos += 1;
                Ok(w)
            }
            Some(Tok::Quoted(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    /// Element of a braced set; keywords are allowed as bare values.
    fn value(&mut self) -> Result<String> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => {
                self.pos += 1;
                Ok(w)
            }
            _ => self.err("expected a value"),
        }
    }

    fn atoms(&mut self) -> Result<BTreeSet<String>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = BTreeSet::new();
        if self.peek() == Some(&Tok::RBrace) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.insert(self.value()?);
            match self.next() {
                Some(Tok::Comma) => {}
                Some(Tok::RBrace) => return Ok(out),
                _ => {
                    self.pos -= 1;
                    return self.err("expected `,` or `}`");
                }
            }
        }
    }

    fn sets(&mut self) -> Result<BTreeSet<BTreeSet<String>>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = BTreeSet::new();
        loop {
            out.insert(self.atoms()?);
            match self.next() {
                Some(Tok::Comma) => {}
                Some(Tok::RBrace) => return Ok(out),
                _ => {
                    self.pos -= 1;
                    return self.err("expected `,` or `}`");
                }
            }
        }
    }

    fn at_set_of_sets(&self) -> bool {
        matches!(
            (self.toks.get(self.pos), self.toks.get(self.pos + 1)),
            (Some((Tok::LBrace, _)), Some((Tok::LBrace, _)))
        )
    }

    fn expr(&mut self, side: Side) -> Result<AttrExpr> {
        let mut e = AttrExpr::top();
        if self.peek_keyword("true") {
            self.pos += 1;
            return Ok(e);
        }
        loop {
            let attr = self.name("an attribute name")?;
            if e.uses(&attr) {
                return self.err(format!("attribute `{attr}` constrained twice"));
            }
            let c = if self.peek_keyword("supseteqin") {
                if side != Side::User {
                    return self.err("`supseteqin` is only allowed in user attribute expressions");
                }
                self.pos += 1;
                Conjunct::Sets(self.sets()?)
            } else {
                self.keyword("in")?;
                if self.at_set_of_sets() {
                    if side == Side::User {
                        return self.err("multi-valued user conjuncts use `supseteqin`");
                    }
                    Conjunct::Sets(self.sets()?)
                } else {
                    Conjunct::Atoms(self.atoms()?)
                }
            };
            if c.is_empty() {
                return self.err(format!("empty conjunct for `{attr}`"));
            }
            e.set(attr, c);
            if self.peek_keyword("and") {
                self.pos += 1;
            } else {
                return Ok(e);
            }
        }
    }

    fn constraint(&mut self) -> Result<BTreeSet<AtomicConstraint>> {
        let mut out = BTreeSet::new();
        if self.peek_keyword("true") {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            let u = self.name("a user attribute name")?;
            let f = if self.peek_keyword("supseteq") {
                self.pos += 1;
                AtomicConstraint::superset_eq(u, self.name("a resource attribute name")?)
            } else if self.peek_keyword("contains") {
                self.pos += 1;
                AtomicConstraint::contains(u, self.name("a resource attribute name")?)
            } else if self.peek() == Some(&Tok::Eq) {
                self.pos += 1;
                AtomicConstraint::equal(u, self.name("a resource attribute name")?)
            } else {
                return self.err("expected `supseteq`, `contains` or `=`");
            };
            out.insert(f);
            if self.peek_keyword("and") {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn done(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }
}

/// Parses the body of a rule line (after `rule:`). `line` is used in error
/// positions.
pub fn parse_rule(src: &str, line: usize) -> Result<Rule> {
    let mut lx = Lexer::new(src, line)?;
    let r = rule_body(&mut lx)?;
    lx.done()?;
    Ok(r)
}

fn rule_body(lx: &mut Lexer) -> Result<Rule> {
    let uae = lx.expr(Side::User)?;
    lx.expect(Tok::Semi, "`;`")?;
    let rae = lx.expr(Side::Resource)?;
    lx.expect(Tok::Semi, "`;`")?;
    let ops = lx.atoms()?;
    if ops.is_empty() {
        return lx.err("empty operation set");
    }
    lx.expect(Tok::Semi, "`;`")?;
    let con = lx.constraint()?;
    Ok(Rule { uae, rae, ops, con })
}

/// Parses a policy file.
pub fn parse_policy(src: &str) -> Result<PolicyText> {
    let mut out = PolicyText::default();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut lx = Lexer::new(raw, line)?;
        match lx.next() {
            Some(Tok::Word(w)) if w == "rule" => {
                lx.expect(Tok::Colon, "`:`")?;
                out.rules.push(rule_body(&mut lx)?);
            }
            Some(Tok::Word(w)) if w == "operations" => {
                lx.expect(Tok::Colon, "`:`")?;
                if out.operations.is_some() {
                    lx.pos = 0;
                    return lx.err("operations declared twice");
                }
                out.operations = Some(lx.atoms()?);
            }
            _ => {
                lx.pos = 0;
                return lx.err("expected `rule:` or `operations:`");
            }
        }
        lx.done()?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_and_parses_a_rule() {
        let r = Rule::new(
            AttrExpr::top()
                .with("position", Conjunct::atoms(["faculty", "student"]))
                .with("crsTaught", Conjunct::sets([vec!["cs601"], vec!["a", "b"]])),
            AttrExpr::top().with("tags", Conjunct::sets([["x"]])),
            ["addScore"],
            [AtomicConstraint::contains("crsTaught", "crs"), AtomicConstraint::equal("dept", "dept")],
        );
        let s = rule_to_string(&r);
        assert_eq!(
            s,
            "crsTaught supseteqin {{a, b}, {cs601}} and position in {faculty, student}; tags in {{x}}; {addScore}; crsTaught contains crs and dept = dept"
        );
        assert_eq!(parse_rule(&s, 1).unwrap(), r);
    }

    #[test]
    fn odd_values_are_quoted() {
        let r = Rule::new(
            AttrExpr::top().with("a", Conjunct::atoms(["two words", "true", "q\"x", ""])),
            AttrExpr::top(),
            ["read"],
            [],
        );
        let s = rule_to_string(&r);
        assert_eq!(parse_rule(&s, 1).unwrap(), r);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_policy("operations: {r}\nrule: a in {x}; true; {r} true\n").unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 2,
                column: 27,
                message: "expected `;`".into()
            }
        );
        assert!(matches!(parse_policy("rule: a in {}; true; {r}; true"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_policy("bogus").is_err());
        assert!(parse_rule("a supseteqin {{x}}; b supseteqin {{y}}; {r}; true", 1).is_err());
    }

    #[test]
    fn policy_roundtrip_and_comments() {
        let src = "# header\noperations: {r, w}\n\nrule: true; true; {r}; true\n";
        let p = parse_policy(src).unwrap();
        assert_eq!(p.operations.as_ref().unwrap().len(), 2);
        assert_eq!(print_policy(p.operations.as_ref().unwrap(), &p.rules), "operations: {r, w}\nrule: true; true; {r}; true\n");
    }
}
