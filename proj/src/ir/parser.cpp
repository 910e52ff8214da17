// Tokenizer and recursive-descent parser for .svfir text. Produces a
// ModuleAst; name resolution and SSA checks happen during lowering.

#include "supa/ir.h"

#include <cctype>
#include <stdexcept>

namespace supa {

std::string Diagnostic::str() const {
  return std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": [" + rule + "] " + message;
}

namespace {

enum class Tok { Ident, Var, Global, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceLoc loc;
};

bool isIdentStart(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
bool isIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

struct SyntaxError {
  Diagnostic diag;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> toks;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == ';') {
      while (i < text.size() && text[i] != '\n')
        advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.loc = {line, col};
    if (c == '%' || c == '@') {
      std::size_t j = i + 1;
      while (j < text.size() && isIdentChar(text[j]))
        ++j;
      if (j == i + 1)
        throw SyntaxError{{t.loc, "syntax", std::string("expected a name after '") + c + "'"}};
      t.kind = c == '%' ? Tok::Var : Tok::Global;
      t.text = std::string(text.substr(i + 1, j - i - 1));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i + 1;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
        ++j;
      t.kind = Tok::Int;
      t.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (isIdentStart(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && isIdentChar(text[j]))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
      t.kind = Tok::Punct;
      t.text = "->";
      advance(2);
    } else if (std::string_view(":=,()[]{}").find(c) != std::string_view::npos) {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      advance(1);
    } else {
      throw SyntaxError{{t.loc, "syntax", std::string("unexpected character '") + c + "'"}};
    }
    toks.push_back(std::move(t));
  }
  Token end;
  end.loc = {line, col};
  toks.push_back(end);
  return toks;
}

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ModuleAst parse() {
    ModuleAst m;
    while (peek().kind != Tok::End) {
      if (isIdent("global")) {
        m.globals.push_back(parseGlobal());
      } else {
        m.functions.push_back(parseFunction());
      }
    }
    return m;
  }

private:
  const Token &peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool isIdent(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == s;
  }
  bool isPunct(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == s;
  }

  [[noreturn]] void fail(const Token &t, const std::string &what, const std::string &rule = "syntax") {
    std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError{{t.loc, rule, what + ", got " + got}};
  }

  void expectPunct(std::string_view s) {
    if (!isPunct(s))
      fail(peek(), "expected '" + std::string(s) + "'");
    next();
  }
  std::string expectIdent(const std::string &what) {
    if (peek().kind != Tok::Ident)
      fail(peek(), "expected " + what);
    return next().text;
  }
  std::string expectVar() {
    if (peek().kind != Tok::Var)
      fail(peek(), "expected a %variable");
    return next().text;
  }
  std::string expectGlobal() {
    if (peek().kind != Tok::Global)
      fail(peek(), "expected an @name");
    return next().text;
  }
  bool acceptArrayAttr() {
    if (isPunct("[") && isIdent("array", 1) && isPunct("]", 2)) {
      pos_ += 3;
      return true;
    }
    if (isIdent("array")) {
      next();
      return true;
    }
    return false;
  }

  GlobalAst parseGlobal() {
    GlobalAst g;
    g.loc = next().loc;
    g.name = expectGlobal();
    g.isArray = acceptArrayAttr();
    if (isPunct("->")) {
      next();
      g.initTarget = expectGlobal();
    }
    return g;
  }

  FunctionAst parseFunction() {
    FunctionAst f;
    f.loc = peek().loc;
    if (peek().kind == Tok::Ident && isPunct(":", 1) && isIdent("func", 2)) {
      f.entryLabel = next().text;
      next();
    }
    if (!isIdent("func"))
      fail(peek(), "expected 'global' or 'func'");
    next();
    f.name = expectGlobal();
    expectPunct("(");
    if (!isPunct(")")) {
      f.params.push_back(expectVar());
      while (isPunct(",")) {
        next();
        f.params.push_back(expectVar());
      }
    }
    expectPunct(")");
    expectPunct("{");
    BlockAst *cur = nullptr;
    while (!isPunct("}")) {
      if (peek().kind == Tok::End)
        fail(peek(), "unterminated function body");
      if (atBlockHeader()) {
        BlockAst b;
        b.loc = peek().loc;
        b.name = next().text;
        next();
        f.blocks.push_back(std::move(b));
        cur = &f.blocks.back();
        continue;
      }
      if (!cur || cur->term.kind != TermAst::Kind::None) {
        if (cur)
          fail(peek(), "instruction after block terminator; start a new block", "cfg");
        BlockAst b;
        b.loc = peek().loc;
        b.name = "entry";
        f.blocks.push_back(std::move(b));
        cur = &f.blocks.back();
      }
      parseStatement(*cur);
    }
    next();
    return f;
  }

  bool atBlockHeader() const {
    if (peek().kind != Tok::Ident || !isPunct(":", 1))
      return false;
    const Token &after = peek(2);
    if (after.kind == Tok::Punct && after.text == "}")
      return true;
    return after.kind == Tok::Ident && isPunct(":", 3);
  }

  void parseStatement(BlockAst &block) {
    if (peek().kind != Tok::Ident || !isPunct(":", 1))
      fail(peek(), "expected 'label:' before instruction");
    Token labelTok = next();
    next();
    const std::string &label = labelTok.text;

    if (isIdent("br") || isIdent("jmp") || isIdent("ret")) {
      TermAst t;
      t.label = label;
      t.loc = labelTok.loc;
      std::string op = next().text;
      if (op == "br") {
        t.kind = TermAst::Kind::Br;
        t.targets.push_back(expectIdent("a block name"));
        if (isPunct(","))
          next();
        t.targets.push_back(expectIdent("a block name"));
      } else if (op == "jmp") {
        t.kind = TermAst::Kind::Jmp;
        t.targets.push_back(expectIdent("a block name"));
      } else {
        t.kind = TermAst::Kind::Ret;
        if (peek().kind == Tok::Var)
          t.retValue = next().text;
      }
      block.term = std::move(t);
      return;
    }

    InstrAst in;
    in.label = label;
    in.loc = labelTok.loc;
    if (isIdent("store")) {
      next();
      in.op = AstOp::Store;
      in.operands.push_back(expectVar());
      expectPunct(",");
      in.operands.push_back(expectVar());
      block.instrs.push_back(std::move(in));
      return;
    }
    if (isIdent("call")) {
      parseCall(in);
      block.instrs.push_back(std::move(in));
      return;
    }
    if (peek().kind != Tok::Var)
      fail(peek(), "expected an instruction");
    in.def = next().text;
    expectPunct("=");
    std::string op = expectIdent("an opcode");
    if (op == "alloca" || op == "heap" || op == "heap0") {
      in.op = op == "alloca" ? AstOp::Alloca : op == "heap" ? AstOp::Heap : AstOp::Heap0;
      if (peek().kind == Tok::Ident && peek().text != "array" && !isPunct(":", 1))
        in.objectName = next().text;
      in.isArray = acceptArrayAttr();
    } else if (op == "addr") {
      in.op = AstOp::Addr;
      in.objectName = "@" + expectGlobal();
    } else if (op == "uao") {
      in.op = AstOp::Uao;
      if (peek().kind == Tok::Global)
        in.objectName = "@" + next().text;
      else
        in.objectName = expectIdent("an object name");
    } else if (op == "copy") {
      in.op = AstOp::Copy;
      in.operands.push_back(expectVar());
      while (isPunct(",")) {
        next();
        in.operands.push_back(expectVar());
      }
    } else if (op == "phi") {
      in.op = AstOp::Phi;
      do {
        if (!in.operands.empty())
          next();
        expectPunct("[");
        in.operands.push_back(expectVar());
        expectPunct(",");
        in.phiBlocks.push_back(expectIdent("a block name"));
        expectPunct("]");
      } while (isPunct(","));
    } else if (op == "field") {
      in.op = AstOp::Field;
      in.operands.push_back(expectVar());
      expectPunct(",");
      if (peek().kind != Tok::Int)
        fail(peek(), "non-constant field offset", "field");
      in.field = std::stoi(next().text);
    } else if (op == "gep-any") {
      in.op = AstOp::Field;
      std::string base = expectVar();
      expectPunct(",");
      if (peek().kind != Tok::Int)
        fail(peek(), "expected the number of fields");
      int n = std::stoi(next().text);
      if (n <= 0)
        fail(peek(), "gep-any needs at least one field");
      // One Field per possible offset, merged by a multi-source Copy.
      InstrAst merge;
      merge.label = label;
      merge.loc = labelTok.loc;
      merge.op = AstOp::Copy;
      merge.def = in.def;
      for (int k = 0; k < n; ++k) {
        InstrAst f;
        f.label = label + ".f" + std::to_string(k);
        f.loc = labelTok.loc;
        f.op = AstOp::Field;
        f.def = in.def + ".f" + std::to_string(k);
        f.operands = {base};
        f.field = k;
        merge.operands.push_back(f.def);
        block.instrs.push_back(std::move(f));
      }
      block.instrs.push_back(std::move(merge));
      return;
    } else if (op == "load") {
      in.op = AstOp::Load;
      in.operands.push_back(expectVar());
    } else if (op == "call") {
      --pos_;
      parseCall(in);
    } else {
      fail(toks_[pos_ - 1], "unknown opcode");
    }
    block.instrs.push_back(std::move(in));
  }

  void parseCall(InstrAst &in) {
    next();
    in.op = AstOp::Call;
    if (peek().kind == Tok::Global)
      in.callee = "@" + next().text;
    else if (peek().kind == Tok::Var)
      in.callee = "%" + next().text;
    else
      fail(peek(), "expected a callee");
    expectPunct("(");
    if (!isPunct(")")) {
      in.operands.push_back(expectVar());
      while (isPunct(",")) {
        next();
        in.operands.push_back(expectVar());
      }
    }
    expectPunct(")");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

} // namespace

ParseOutcome parseModule(std::string_view text) {
  ParseOutcome out;
  try {
    Parser p(tokenize(text));
    out.module = p.parse();
  } catch (const SyntaxError &e) {
    out.diagnostics.push_back(e.diag);
  }
  return out;
}

} // namespace supa
