//! The formula language: tokenizer, parser, AST, printer and reference
//! rewriting.
//!
//! ```text
//! formula    = comparison
//! comparison = concat [ ("=" | "<>" | "<" | "<=" | ">" | ">=") concat ]
//! concat     = additive { "&" additive }
//! additive   = term { ("+" | "-") term }
//! term       = unary { ("*" | "/") unary }
//! unary      = ("-" | "+") unary | power
//! power      = postfix [ "^" unary ]
//! postfix    = primary { "%" }
//! primary    = number | string | TRUE | FALSE | ref [ ":" ref ]
//!            | name "(" [ comparison { "," comparison } ] ")"
//!            | "(" comparison ")"
//! ref        = [ sheet "!" ] ["$"] letters ["$"] digits
//! sheet      = word | "'" { char | "''" } "'"
//! string     = '"' { char | '""' } '"'
//! ```

mod ast;
mod lexer;
mod parser;
mod printer;
mod refs;

pub use ast::{BinaryOp, Expr, RefItem, UnaryOp};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse_formula;
pub use printer::{print_formula, relative_key};
pub use refs::{collect_refs, translate_refs};
