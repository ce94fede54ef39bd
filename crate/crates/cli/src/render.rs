//! Heat-map rendering: ANSI background colors on the terminal and a static
//! HTML page with inline styles. Both use the five-level legend driven by
//! each row's own bucket edges.

use crate::commands::sig6;
use ctxdecomp::eval::report::{bucket_of, AttributionOutput};

const LEGEND: [&str; 5] = [
    "very negative",
    "negative",
    "neutral",
    "positive",
    "very positive",
];

fn ansi_code(bucket: i8) -> &'static str {
    match bucket {
        -2 => "\x1b[48;5;160m\x1b[38;5;231m",
        -1 => "\x1b[48;5;217m\x1b[38;5;16m",
        1 => "\x1b[48;5;153m\x1b[38;5;16m",
        2 => "\x1b[48;5;26m\x1b[38;5;231m",
        _ => "",
    }
}

const ANSI_RESET: &str = "\x1b[0m";

pub fn print_ansi(output: &AttributionOutput) {
    println!("tokens: {}", output.tokens.join(" "));
    for row in &output.rows {
        let mut line = format!("{:>22} | ", row.method);
        if row.spans.len() == output.tokens.len()
            && row.spans.iter().enumerate().all(|(t, s)| s == &[t + 1, t + 1])
        {
            // Word-level row: color each token by its bucket.
            for (token, score) in output.tokens.iter().zip(&row.scores) {
                let bucket = bucket_of(*score, row.bucket_edges);
                if bucket == 0 {
                    line.push_str(token);
                } else {
                    line.push_str(&format!("{}{token}{ANSI_RESET}", ansi_code(bucket)));
                }
                line.push(' ');
            }
        } else {
            for (span, score) in row.spans.iter().zip(&row.scores) {
                line.push_str(&format!(
                    "[{}:{}] = {}  ",
                    span[0],
                    span[1],
                    sig6(*score)
                ));
            }
        }
        if !row.usable {
            line.push_str(" (unusable)");
        }
        println!("{line}");
        let scores: Vec<String> = row.scores.iter().map(|s| sig6(*s)).collect();
        println!("{:>22} | scores: {}", "", scores.join(" "));
    }
    let legend: Vec<String> = (-2i8..=2)
        .map(|b| {
            let name = LEGEND[(b + 2) as usize];
            if b == 0 {
                name.to_string()
            } else {
                format!("{}{name}{ANSI_RESET}", ansi_code(b))
            }
        })
        .collect();
    println!("legend: {}", legend.join(" "));
    println!();
}

fn html_color(bucket: i8) -> &'static str {
    match bucket {
        -2 => "background-color:#c23b3b;color:#ffffff",
        -1 => "background-color:#f2c4c4",
        1 => "background-color:#c4d7f2",
        2 => "background-color:#2b5fc2;color:#ffffff",
        _ => "",
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// One static page per run; inline styles only, no scripts.
pub fn html_page(outputs: &[AttributionOutput]) -> String {
    let mut html = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\
         <title>attribution heat map</title></head>\n<body style=\"font-family:sans-serif\">\n",
    );
    for output in outputs {
        html.push_str("<table style=\"border-collapse:collapse;margin:1em 0\">\n");
        for row in &output.rows {
            html.push_str(&format!(
                "<tr><td style=\"padding:4px 10px;font-weight:bold\">{}</td><td>",
                escape(&row.method)
            ));
            if row.spans.len() == output.tokens.len()
                && row.spans.iter().enumerate().all(|(t, s)| s == &[t + 1, t + 1])
            {
                for (token, score) in output.tokens.iter().zip(&row.scores) {
                    let bucket = bucket_of(*score, row.bucket_edges);
                    html.push_str(&format!(
                        "<span title=\"{}\" style=\"padding:2px 4px;{}\">{}</span> ",
                        sig6(*score),
                        html_color(bucket),
                        escape(token)
                    ));
                }
            } else {
                for (span, score) in row.spans.iter().zip(&row.scores) {
                    html.push_str(&format!(
                        "<span>[{}:{}] = {}</span> ",
                        span[0],
                        span[1],
                        sig6(*score)
                    ));
                }
            }
            html.push_str("</td></tr>\n");
        }
        html.push_str("</table>\n");
    }
    html.push_str("<p>legend: ");
    for (bucket, name) in (-2i8..=2).zip(LEGEND) {
        html.push_str(&format!(
            "<span style=\"padding:2px 6px;{}\">{}</span> ",
            html_color(bucket),
            name
        ));
    }
    html.push_str("</p>\n</body></html>\n");
    html
}
