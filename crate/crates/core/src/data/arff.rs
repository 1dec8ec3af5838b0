//! The dense, nominal/numeric subset of Weka's ARFF format.

use std::fmt::Write as _;
use std::path::Path;

use super::{detect_kinds, Dataset, DatasetBuilder};
use crate::error::{Error, Result};

enum AttrType {
    Nominal(Vec<String>),
    Numeric,
}

struct Attr {
    name: String,
    ty: AttrType,
}

pub fn load_arff(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_arff(&text)
}

pub(crate) fn parse_arff(text: &str) -> Result<Dataset> {
    let mut relation = String::from("dataset");
    let mut attrs: Vec<Attr> = Vec::new();
    let mut lines = text.lines().enumerate();
    let mut in_data = false;

    for (i, raw) in lines.by_ref() {
        let row = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            let rest = line["@relation".len()..].trim();
            relation = split_fields(rest, row, ' ')?
                .into_iter()
                .next()
                .map(|(t, _)| t)
                .unwrap_or_default();
        } else if lower.starts_with("@attribute") {
            attrs.push(parse_attribute(line["@attribute".len()..].trim(), row)?);
        } else if lower.starts_with("@data") {
            in_data = true;
            break;
        } else {
            return Err(Error::Parse {
                row,
                msg: format!("unexpected header line `{line}`"),
            });
        }
    }
    if !in_data {
        return Err(Error::data("ARFF file has no @data section"));
    }
    let Some((class_attr, feature_attrs)) = attrs.split_last() else {
        return Err(Error::data("ARFF file declares no attributes"));
    };

    let mut b = DatasetBuilder::new(
        relation,
        feature_attrs.iter().map(|a| a.name.clone()),
        class_attr.name.clone(),
    );
    for (x, a) in feature_attrs.iter().enumerate() {
        if let AttrType::Nominal(values) = &a.ty {
            b.domain(x, values.clone())?;
        }
    }
    if let AttrType::Nominal(labels) = &class_attr.ty {
        b.label_domain(labels.clone())?;
    }

    let width = attrs.len();
    for (i, raw) in lines {
        let row = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if line.starts_with('{') {
            return Err(Error::Unsupported(format!("sparse ARFF row at line {row}")));
        }
        let mut fields = split_fields(line, row, ',')?;
        let mut weight = 1.0;
        if fields.len() == width + 1 {
            let (last, _) = fields.pop().unwrap_or_default();
            weight = last
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    row,
                    msg: format!("bad instance weight `{last}`"),
                })?;
        }
        if fields.len() != width {
            return Err(Error::Parse {
                row,
                msg: format!("expected {width} values, found {}", fields.len()),
            });
        }
        let (label, label_quoted) = fields.pop().unwrap_or_default();
        if label == "?" && !label_quoted {
            return Err(Error::Parse {
                row,
                msg: "missing class label".into(),
            });
        }
        let tokens: Vec<Option<&str>> = fields
            .iter()
            .map(|(f, quoted)| (*quoted || f != "?").then_some(f.as_str()))
            .collect();
        b.push(&tokens, &label, weight).map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
    }
    let mut d = b.build();
    detect_kinds(&mut d);
    Ok(d)
}

fn parse_attribute(rest: &str, row: usize) -> Result<Attr> {
    let (name, ty) = take_token(rest, row)?;
    let ty = ty.trim();
    if let Some(body) = ty.strip_prefix('{') {
        let body = body.strip_suffix('}').ok_or_else(|| Error::Parse {
            row,
            msg: "unterminated nominal domain".into(),
        })?;
        let values = if body.trim().is_empty() {
            Vec::new()
        } else {
            split_fields(body, row, ',')?.into_iter().map(|(t, _)| t).collect()
        };
        return Ok(Attr {
            name,
            ty: AttrType::Nominal(values),
        });
    }
    match ty.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => Ok(Attr {
            name,
            ty: AttrType::Numeric,
        }),
        other => Err(Error::Unsupported(format!(
            "attribute type `{other}` (line {row})"
        ))),
    }
}

/// Splits off the first (possibly quoted) token, returning it and the rest.
fn take_token(s: &str, row: usize) -> Result<(String, &str)> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, q @ ('\'' | '"'))) => {
            let mut out = String::new();
            let mut escaped = false;
            for (i, c) in chars {
                if escaped {
                    out.push(c);
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    return Ok((out, &s[i + 1..]));
                } else {
                    out.push(c);
                }
            }
            Err(Error::Parse {
                row,
                msg: "unterminated quote".into(),
            })
        }
        Some(_) => {
            let end = s
                .find(|c: char| c.is_whitespace() || c == '{')
                .unwrap_or(s.len());
            Ok((s[..end].to_string(), &s[end..]))
        }
        None => Err(Error::Parse {
            row,
            msg: "expected a token".into(),
        }),
    }
}

/// Splits a separator-delimited list honouring single and double quotes.
/// Each field comes with a flag telling whether it was quoted.
fn split_fields(s: &str, row: usize, sep: char) -> Result<Vec<(String, bool)>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut quoted_field = false;
    let mut escaped = false;
    for c in s.chars() {
        if let Some(q) = quote {
            if escaped {
                cur.push(c);
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            } else {
                cur.push(c);
            }
            continue;
        }
        if c == sep {
            out.push(finish(&mut cur, &mut quoted_field));
        } else if (c == '\'' || c == '"') && cur.trim().is_empty() {
            cur.clear();
            quote = Some(c);
            quoted_field = true;
        } else {
            cur.push(c);
        }
    }
    if quote.is_some() {
        return Err(Error::Parse {
            row,
            msg: "unterminated quote".into(),
        });
    }
    out.push(finish(&mut cur, &mut quoted_field));
    Ok(out)
}

fn finish(cur: &mut String, quoted: &mut bool) -> (String, bool) {
    let field = if *quoted {
        std::mem::take(cur)
    } else {
        let t = cur.trim().to_string();
        cur.clear();
        t
    };
    (field, std::mem::take(quoted))
}

fn quote(token: &str) -> String {
    let needs = token.is_empty()
        || token == "?"
        || token
            .chars()
            .any(|c| c.is_whitespace() || ",{}'\"%\\".contains(c));
    if !needs {
        return token.to_string();
    }
    let mut out = String::with_capacity(token.len() + 2);
    out.push('\'');
    for c in token.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
    out
}

pub(crate) fn to_arff_string(d: &Dataset) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "@relation {}\n", quote(&d.name));
    for f in &d.features {
        let dom: Vec<String> = f.values.iter().map(|v| quote(v)).collect();
        let _ = writeln!(s, "@attribute {} {{{}}}", quote(&f.name), dom.join(","));
    }
    let labels: Vec<String> = d.labels.iter().map(|v| quote(v)).collect();
    let _ = writeln!(s, "@attribute {} {{{}}}", quote(&d.class_name), labels.join(","));
    s.push_str("\n@data\n");
    for inst in &d.instances {
        let mut cells: Vec<String> = inst
            .slots
            .iter()
            .enumerate()
            .map(|(x, &slot)| d.token(x, slot).map_or_else(|| "?".to_string(), quote))
            .collect();
        cells.push(quote(&d.labels[inst.label as usize]));
        s.push_str(&cells.join(","));
        if inst.weight != 1.0 {
            let _ = write!(s, ",{{{}}}", inst.weight);
        }
        s.push('\n');
    }
    s
}
