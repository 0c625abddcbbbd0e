use crate::expr::Pos;

/// A comma- or line-separated item with the position of its first character.
#[derive(Clone, Debug)]
pub(crate) struct Item<'a> {
    pub text: &'a str,
    pub pos: Pos,
}

pub(crate) fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(code, _)| code)
}

/// `name:` at the start of a line, returning the name, the remainder and its 1-based column.
pub(crate) fn header(line: &str) -> Option<(&str, &str, usize)> {
    let start = line.len() - line.trim_start().len();
    let rest = &line[start..];
    let name_len = rest.bytes().take_while(u8::is_ascii_alphabetic).count();
    if name_len == 0 {
        return None;
    }
    let after = &rest[name_len..];
    let gap = after.len() - after.trim_start().len();
    let after = &after[gap..];
    let body = after.strip_prefix(':')?;
    Some((&rest[..name_len], body, start + name_len + gap + 2))
}

/// Split on top-level commas, dropping blank pieces.
pub(crate) fn split_items<'a>(text: &'a str, line: usize, column: usize) -> Vec<Item<'a>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut begin = 0;
    let push = |a: usize, b: usize, out: &mut Vec<Item<'a>>| {
        let piece = &text[a..b];
        let lead = piece.len() - piece.trim_start().len();
        let trimmed = piece.trim();
        if !trimmed.is_empty() {
            out.push(Item { text: trimmed, pos: Pos { line, column: column + a + lead } });
        }
    };
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                push(begin, i, &mut out);
                begin = i + 1;
            }
            _ => {}
        }
    }
    push(begin, text.len(), &mut out);
    out
}

/// `lhs = rhs` with the position of `rhs`.
pub(crate) fn split_assignment<'a>(item: &Item<'a>) -> Option<(&'a str, Item<'a>)> {
    let (lhs, rhs) = item.text.split_once('=')?;
    let lead = rhs.len() - rhs.trim_start().len();
    let pos = Pos { line: item.pos.line, column: item.pos.column + lhs.len() + 1 + lead };
    Some((lhs.trim(), Item { text: rhs.trim(), pos }))
}
