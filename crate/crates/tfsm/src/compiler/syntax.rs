//! Lexer and parser for grammar sources: characterization statements,
//! macros, rules with `cat>`/`goal>` daughters, lexical entries, empty
//! categories and an optional `start` description.

use std::fmt;

use crate::compiler::CompileError;
use crate::types::CharStatement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Dot,
    At,
    Gt,
    RuleArrow,
    LexArrow,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::At => f.write_str("`@`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::RuleArrow => f.write_str("`===>`"),
            Tok::LexArrow => f.write_str("`--->`"),
        }
    }
}

fn ident_start(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '$' | '^')
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '$' | '^' | '\'')
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, CompileError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |pos: Pos, msg: String| CompileError::Syntax { pos, msg };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            col += 2;
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            if i >= chars.len() {
                return Err(syntax(pos, "unterminated comment".into()));
            }
            advance(2, &mut i, &mut col);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 4)].iter().collect();
        if rest == "===>" {
            out.push((Tok::RuleArrow, pos));
            advance(4, &mut i, &mut col);
            continue;
        }
        if rest == "--->" {
            out.push((Tok::LexArrow, pos));
            advance(4, &mut i, &mut col);
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '.' => Some(Tok::Dot),
            '@' => Some(Tok::At),
            '>' => Some(Tok::Gt),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            advance(1, &mut i, &mut col);
            continue;
        }
        if ident_start(c) {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let dash_inside = d == '-' && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
                if ident_char(d) || dash_inside {
                    i += 1;
                    col += 1;
                } else {
                    break;
                }
            }
            let word: String = chars[start..i].iter().collect();
            let is_var = c.is_uppercase() || c == '_';
            out.push((if is_var { Tok::Var(word) } else { Tok::Ident(word) }, pos));
            continue;
        }
        return Err(syntax(pos, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

/// A feature-structure description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Desc {
    Type(String, Pos),
    Var(String, Pos),
    Feat(String, Box<Desc>, Pos),
    Conj(Vec<Desc>),
    Macro(String, Vec<Desc>, Pos),
}

#[derive(Clone, Debug)]
pub struct MacroDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Desc,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct GoalCall {
    pub name: String,
    pub args: Vec<Desc>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct RuleDef {
    pub name: String,
    pub head: Desc,
    pub body: Vec<Desc>,
    pub goals: Vec<GoalCall>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct LexEntry {
    pub word: String,
    pub desc: Desc,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default)]
pub struct SourceGrammar {
    pub chars: Vec<CharStatement>,
    pub macros: Vec<MacroDef>,
    pub rules: Vec<RuleDef>,
    pub lexicon: Vec<LexEntry>,
    pub empties: Vec<(Desc, Pos)>,
    pub start: Option<(Desc, Pos)>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.at + 1).map(|t| &t.0)
    }

    fn pos(&self) -> Pos {
        self.toks
            .get(self.at)
            .or(self.toks.last())
            .map(|t| t.1)
            .unwrap_or_default()
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, CompileError> {
        Err(CompileError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, CompileError> {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), CompileError> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            self.unexpected(&t.to_string())
        }
    }

    fn ident(&mut self) -> Result<String, CompileError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => self.unexpected("a name"),
        }
    }

    fn is_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == word)
    }

    fn statement(&mut self, g: &mut SourceGrammar) -> Result<(), CompileError> {
        let pos = self.pos();
        let keyword_use = !matches!(self.peek2(), Some(Tok::LexArrow))
            && !matches!(self.peek2(), Some(Tok::Ident(s)) if s == "sub" || s == "macro" || s == "rule");
        if self.is_keyword("empty") && keyword_use {
            self.at += 1;
            let d = self.conj()?;
            self.expect(Tok::Dot)?;
            g.empties.push((d, pos));
            return Ok(());
        }
        if self.is_keyword("start") && keyword_use {
            self.at += 1;
            let d = self.conj()?;
            self.expect(Tok::Dot)?;
            if g.start.is_some() {
                return Err(CompileError::Syntax { pos, msg: "second `start` statement".into() });
            }
            g.start = Some((d, pos));
            return Ok(());
        }
        let name = self.ident()?;
        match self.peek() {
            Some(Tok::LexArrow) => {
                self.at += 1;
                let desc = self.conj()?;
                self.expect(Tok::Dot)?;
                g.lexicon.push(LexEntry { word: name, desc, pos });
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let mut params = Vec::new();
                loop {
                    match self.peek() {
                        Some(Tok::Var(v)) => {
                            params.push(v.clone());
                            self.at += 1;
                        }
                        _ => return self.unexpected("a parameter variable"),
                    }
                    match self.peek() {
                        Some(Tok::Comma) => self.at += 1,
                        Some(Tok::RParen) => {
                            self.at += 1;
                            break;
                        }
                        _ => return self.unexpected("`,` or `)`"),
                    }
                }
                if !self.is_keyword("macro") {
                    return self.unexpected("`macro`");
                }
                self.at += 1;
                let body = self.conj()?;
                self.expect(Tok::Dot)?;
                g.macros.push(MacroDef { name, params, body, pos });
            }
            Some(Tok::Ident(kw)) if kw == "macro" => {
                self.at += 1;
                let body = self.conj()?;
                self.expect(Tok::Dot)?;
                g.macros.push(MacroDef { name, params: Vec::new(), body, pos });
            }
            Some(Tok::Ident(kw)) if kw == "rule" => {
                self.at += 1;
                let head = self.conj()?;
                self.expect(Tok::RuleArrow)?;
                let mut body = Vec::new();
                let mut goals = Vec::new();
                loop {
                    let item_pos = self.pos();
                    match self.peek() {
                        Some(Tok::Ident(kw)) if kw == "cat" && self.peek2() == Some(&Tok::Gt) => {
                            self.at += 2;
                            if !goals.is_empty() {
                                return Err(CompileError::Syntax {
                                    pos: item_pos,
                                    msg: "`cat>` daughters must precede all goals".into(),
                                });
                            }
                            body.push(self.term()?);
                        }
                        Some(Tok::Ident(kw)) if kw == "goal" && self.peek2() == Some(&Tok::Gt) => {
                            self.at += 2;
                            let gname = self.ident()?;
                            let mut args = Vec::new();
                            self.expect(Tok::LParen)?;
                            loop {
                                args.push(self.term()?);
                                match self.peek() {
                                    Some(Tok::Comma) => self.at += 1,
                                    Some(Tok::RParen) => {
                                        self.at += 1;
                                        break;
                                    }
                                    _ => return self.unexpected("`,` or `)`"),
                                }
                            }
                            goals.push(GoalCall { name: gname, args, pos: item_pos });
                        }
                        _ => return self.unexpected("`cat>` or `goal>`"),
                    }
                    match self.peek() {
                        Some(Tok::Comma) => self.at += 1,
                        Some(Tok::Dot) => {
                            self.at += 1;
                            break;
                        }
                        _ => return self.unexpected("`,` or `.`"),
                    }
                }
                g.rules.push(RuleDef { name, head, body, goals, pos });
            }
            Some(Tok::Ident(kw)) if kw == "sub" => {
                self.at += 1;
                let subtypes = self.name_list()?;
                let mut intros = Vec::new();
                if self.is_keyword("intro") {
                    self.at += 1;
                    self.expect(Tok::LBrack)?;
                    if self.peek() != Some(&Tok::RBrack) {
                        loop {
                            let f = self.ident()?;
                            self.expect(Tok::Colon)?;
                            let t = self.ident()?;
                            intros.push((f, t));
                            match self.peek() {
                                Some(Tok::Comma) => self.at += 1,
                                _ => break,
                            }
                        }
                    }
                    self.expect(Tok::RBrack)?;
                }
                self.expect(Tok::Dot)?;
                g.chars.push(CharStatement { subject: name, subtypes, intros, line: pos.line });
            }
            _ => return self.unexpected("`sub`, `rule`, `macro` or `--->`"),
        }
        Ok(())
    }

    fn name_list(&mut self) -> Result<Vec<String>, CompileError> {
        self.expect(Tok::LBrack)?;
        let mut out = Vec::new();
        if self.peek() == Some(&Tok::RBrack) {
            self.at += 1;
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            match self.peek() {
                Some(Tok::Comma) => self.at += 1,
                Some(Tok::RBrack) => {
                    self.at += 1;
                    return Ok(out);
                }
                _ => return self.unexpected("`,` or `]`"),
            }
        }
    }

    fn conj(&mut self) -> Result<Desc, CompileError> {
        let mut parts = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.at += 1;
            parts.push(self.term()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Desc::Conj(parts) })
    }

    fn term(&mut self) -> Result<Desc, CompileError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.at += 1;
                Ok(Desc::Var(v, pos))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let d = self.conj()?;
                self.expect(Tok::RParen)?;
                Ok(d)
            }
            Some(Tok::At) => {
                self.at += 1;
                let name = self.ident()?;
                let mut args = Vec::new();
                if self.peek() == Some(&Tok::LParen) {
                    self.at += 1;
                    loop {
                        args.push(self.term()?);
                        match self.peek() {
                            Some(Tok::Comma) => self.at += 1,
                            Some(Tok::RParen) => {
                                self.at += 1;
                                break;
                            }
                            _ => return self.unexpected("`,` or `)`"),
                        }
                    }
                }
                Ok(Desc::Macro(name, args, pos))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if self.peek() == Some(&Tok::Colon) {
                    self.at += 1;
                    let value = self.term()?;
                    Ok(Desc::Feat(name, Box::new(value), pos))
                } else {
                    Ok(Desc::Type(name, pos))
                }
            }
            _ => self.unexpected("a description"),
        }
    }
}

pub fn parse_source(text: &str) -> Result<SourceGrammar, CompileError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let mut g = SourceGrammar::default();
    while p.peek().is_some() {
        p.statement(&mut g)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_with_inner_dashes_and_sigils() {
        let toks: Vec<Tok> = lex("ha-sepr ---> $ar ^akal x-1.").unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("ha-sepr".into()),
                Tok::LexArrow,
                Tok::Ident("$ar".into()),
                Tok::Ident("^akal".into()),
                Tok::Ident("x-1".into()),
                Tok::Dot
            ]
        );
    }

    #[test]
    fn minimal_entry() {
        let g = parse_source("x ---> (t).").unwrap();
        assert_eq!(g.lexicon.len(), 1);
        assert!(matches!(&g.lexicon[0].desc, Desc::Type(t, _) if t == "t"));
    }

    #[test]
    fn rule_with_goal_and_bare_variable_daughter() {
        let g = parse_source("r rule (p,f:X) ===> cat> (q,f:Y), cat> Y, goal> union(X,Y,Z).").unwrap();
        let r = &g.rules[0];
        assert_eq!(r.body.len(), 2);
        assert!(matches!(&r.body[1], Desc::Var(v, _) if v == "Y"));
        assert_eq!(r.goals[0].args.len(), 3);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_source("a sub [b\nc].").unwrap_err();
        match err {
            CompileError::Syntax { pos, .. } => assert_eq!(pos.line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
