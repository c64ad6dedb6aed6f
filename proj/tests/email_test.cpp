#include <doctest.h>

#include "mailsentry/email.hpp"
#include "mailsentry/util.hpp"
#include "testutil.hpp"

using namespace mailsentry;

TEST_CASE("minimal eml maps headers and derives time fields") {
  std::string raw = read_file(testutil::fixture("minimal.eml"));
  auto e = parse_email(raw, EmailFormat::eml);
  REQUIRE(e.has_value());
  CHECK(e->sender.str() == "a@x.com");
  REQUIRE(e->recipients.size() == 1);
  CHECK(e->recipients[0].str() == "b@y.com");
  CHECK(e->weekday == 1);  // Tuesday
  CHECK(e->hour == 14);
  CHECK(e->subject == "hello");
  CHECK(trim(e->body) == "hi");
  CHECK(e->message_id == "<m1@x.com>");
  CHECK_FALSE(e->is_reply);
  CHECK_FALSE(e->has_signature);
}

TEST_CASE("parsing is deterministic") {
  std::string raw = read_file(testutil::fixture("multipart.eml"));
  auto a = parse_email(raw, EmailFormat::eml);
  auto b = parse_email(raw, EmailFormat::eml);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->body == b->body);
  CHECK(a->urls == b->urls);
  CHECK(a->sent_at == b->sent_at);
  CHECK(a->quoted_line_count == b->quoted_line_count);
}

TEST_CASE("multipart: decoding, quoting, attachments, reply detection") {
  auto e = parse_email(read_file(testutil::fixture("multipart.eml")), EmailFormat::eml);
  REQUIRE(e.has_value());
  CHECK(e->sender.str() == "alice@corp.example");  // lowercased
  CHECK(e->recipients.size() == 2);
  CHECK(e->cc.size() == 1);
  CHECK(e->is_reply);
  CHECK(e->has_attachment);
  CHECK_FALSE(e->has_html);
  CHECK(e->quoted_line_count == 2);
  // quoted-printable em dash decoded, URL found
  CHECK(e->body.find("\xE2\x80\x94") != std::string::npos);
  REQUIRE(e->urls.size() == 1);
  CHECK(e->urls[0] == "http://intra.corp.example/q3");
  // '-0500' header offset: hour as the sender wrote it
  CHECK(e->hour == 9);
  CHECK(e->weekday == 0);  // Monday
}

TEST_CASE("html body is stripped and flagged") {
  auto e = parse_email(read_file(testutil::fixture("html_only.eml")), EmailFormat::eml);
  REQUIRE(e.has_value());
  CHECK(e->has_html);
  CHECK(e->body.find("<p>") == std::string::npos);
  CHECK(e->body.find("Hello team,") != std::string::npos);
  REQUIRE(e->urls.size() == 1);
  CHECK(url_domain(e->urls[0]) == "intra.corp.example");
}

TEST_CASE("signature block and indentation") {
  auto e = parse_email(read_file(testutil::fixture("signature.eml")), EmailFormat::eml);
  REQUIRE(e.has_value());
  CHECK(e->has_signature);
  CHECK(e->indented_line_count == 1);
  std::string authored = authored_text(*e);
  CHECK(authored.find("555-123-4567") == std::string::npos);
  CHECK(authored.find("Quick notes") != std::string::npos);
}

TEST_CASE("url extraction matches the body tokens") {
  Email e;
  e.body = "see http://intra.corp/page and (https://x.y/z), plus www.plain.example.";
  auto urls = extract_urls(e.body);
  REQUIRE(urls.size() == 3);
  CHECK(urls[0] == "http://intra.corp/page");
  CHECK(urls[1] == "https://x.y/z");
  CHECK(urls[2] == "www.plain.example");
  CHECK(url_domain("http://intra.corp:8080/p/q?x=1") == "intra.corp");
  CHECK(url_domain("www.plain.example") == "www.plain.example");
}

TEST_CASE("quoted lines counting rule") {
  std::string raw =
      "From: a@x.com\nTo: b@y.com\nDate: Tue, 4 Feb 2014 14:05:00 +0000\n\n"
      "> one\n> two\n > three\nplain\n";
  auto e = parse_email(raw, EmailFormat::eml);
  REQUIRE(e.has_value());
  CHECK(e->quoted_line_count == 3);
}

TEST_CASE("quoted + indented never exceed total body lines") {
  std::mt19937_64 rng(99);
  const char* pieces[] = {"> quoted\n", "  indented\n", "plain line\n", "\n", "word\n"};
  for (int round = 0; round < 50; ++round) {
    std::string body;
    int lines = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < lines; ++i) body += pieces[rng() % 5];
    std::string raw = "From: a@x.com\nTo: b@y.com\n\n" + body;
    auto e = parse_email(raw, EmailFormat::eml);
    REQUIRE(e.has_value());
    const int total = static_cast<int>(split_lines(e->body).size());
    CHECK(e->quoted_line_count + e->indented_line_count <= total);
  }
}

TEST_CASE("date parsing variants") {
  auto d1 = parse_date("Tue, 4 Feb 2014 14:05:00 +0000");
  REQUIRE(d1.has_value());
  CHECK(d1->civil.hour == 14);
  CHECK(d1->has_offset);

  auto d2 = parse_date("4 Feb 14 14:05 EST");
  REQUIRE(d2.has_value());
  CHECK(d2->civil.year == 2014);
  CHECK(d2->offset_minutes == -300);

  auto d3 = parse_date("2014-02-04T14:05:00+01:00");
  REQUIRE(d3.has_value());
  CHECK(d3->offset_minutes == 60);

  CHECK_FALSE(parse_date("not a date").has_value());
}

TEST_CASE("weekday/hour are pure functions of sent_at under a fixed zone") {
  ParsedDate d;
  d.civil = {2014, 2, 4, 23, 30, 0};
  d.offset_minutes = 0;
  d.has_offset = true;

  Email header_policy;
  apply_time_policy(d, TimePolicy{}, header_policy);
  CHECK(header_policy.hour == 23);
  CHECK(header_policy.weekday == 1);

  // +02:00 fixed zone pushes 23:30Z over midnight into Wednesday
  Email fixed_policy;
  apply_time_policy(d, TimePolicy{false, 120}, fixed_policy);
  CHECK(fixed_policy.hour == 1);
  CHECK(fixed_policy.weekday == 2);
  CHECK(fixed_policy.sent_at == header_policy.sent_at);
}

TEST_CASE("address parsing and list splitting") {
  auto a = Address::parse("Alice Smith <Alice@Corp.Example>");
  REQUIRE(a.has_value());
  CHECK(a->str() == "alice@corp.example");
  CHECK(a->domain == "corp.example");

  auto list = parse_address_list("\"Jones, Bob\" <bob@x.com>, carol@y.com; dave@z.com");
  REQUIRE(list.size() == 3);
  CHECK(list[0].str() == "bob@x.com");
  CHECK(list[1].str() == "carol@y.com");
  CHECK(list[2].str() == "dave@z.com");

  CHECK_FALSE(Address::parse("no-at-sign").has_value());
  CHECK_FALSE(Address::parse("@nodomainlocal").has_value());
}

TEST_CASE("address round-trips to local@domain") {
  for (const char* s : {"a@x.com", "first.last@sub.dom.org", "u_1@corp.example"}) {
    auto a = Address::parse(s);
    REQUIRE(a.has_value());
    CHECK(a->str() == s);
  }
}

TEST_CASE("jsonl email parsing") {
  std::string line =
      R"({"message_id":"j1","from":"a@x.com","to":["b@y.com","c@y.com"],"cc":["d@z.org"],)"
      R"("date":"Tue, 4 Feb 2014 14:05:00 +0000","subject":"Re: x","body":"see http://z.org/p\n> old"})";
  auto e = parse_email(line, EmailFormat::jsonl);
  REQUIRE(e.has_value());
  CHECK(e->message_id == "j1");
  CHECK(e->recipients.size() == 2);
  CHECK(e->cc.size() == 1);
  CHECK(e->weekday == 1);
  CHECK(e->hour == 14);
  CHECK(e->is_reply);
  CHECK(e->quoted_line_count == 1);
  REQUIRE(e->urls.size() == 1);
  CHECK(e->urls[0] == "http://z.org/p");

  CHECK_FALSE(parse_email("{\"body\":\"x\"}", EmailFormat::jsonl).has_value());
  CHECK_FALSE(parse_email("not json", EmailFormat::jsonl).has_value());
}

TEST_CASE("malformed headers are reported, not thrown") {
  std::string err;
  auto e = parse_email("no colon line\nanother\n\nbody", EmailFormat::eml, {}, &err);
  CHECK_FALSE(e.has_value());
  CHECK_FALSE(err.empty());

  auto e2 = parse_email("Subject: x\n\nbody", EmailFormat::eml, {}, &err);
  CHECK_FALSE(e2.has_value());  // no From
}

TEST_CASE("non-utf8 bytes are replaced, never fatal") {
  std::string raw = "From: a@x.com\nTo: b@y.com\n\nbad \xFF\xFE bytes";
  auto e = parse_email(raw, EmailFormat::eml);
  REQUIRE(e.has_value());
  CHECK(e->body.find("\xEF\xBF\xBD") != std::string::npos);
  CHECK(e->body.find('\xFF') == std::string::npos);
}

TEST_CASE("corpus-style quirks: folded recipients, zone suffix, nested multipart") {
  // folded To: spanning lines, offset with a trailing zone name
  std::string raw =
      "Message-ID: <q1@corp.example>\n"
      "Date: Wed, 13 Dec 2000 08:22:00 -0800 (PST)\n"
      "From: sender@corp.example\n"
      "To: first@corp.example, second@corp.example,\n"
      "\tthird@corp.example,\n"
      "    fourth@other.example\n"
      "Subject: weekly totals\n"
      "Mime-Version: 1.0\n"
      "Content-Type: text/plain; charset=us-ascii\n"
      "\n"
      "totals attached\n";
  auto e = parse_email(raw, EmailFormat::eml);
  REQUIRE(e.has_value());
  CHECK(e->recipients.size() == 4);
  CHECK(e->recipients[3].str() == "fourth@other.example");
  CHECK(e->hour == 8);     // the sender's own clock
  CHECK(e->weekday == 2);  // Wednesday

  // nested multipart/alternative inside multipart/mixed, base64 text leaf
  std::string nested =
      "From: sender@corp.example\n"
      "To: r@corp.example\n"
      "Date: Thu, 1 Feb 2001 07:44:00 -0800 (PST)\n"
      "Content-Type: multipart/mixed; boundary=\"outer\"\n"
      "\n"
      "--outer\n"
      "Content-Type: multipart/alternative; boundary=\"inner\"\n"
      "\n"
      "--inner\n"
      "Content-Type: text/plain\n"
      "Content-Transfer-Encoding: base64\n"
      "\n"
      "aGVsbG8gZnJvbSBiYXNlNjQ=\n"
      "--inner\n"
      "Content-Type: text/html\n"
      "\n"
      "<p>hello from html</p>\n"
      "--inner--\n"
      "--outer\n"
      "Content-Type: image/png; name=\"chart.png\"\n"
      "Content-Disposition: attachment; filename=\"chart.png\"\n"
      "\n"
      "nonsense\n"
      "--outer--\n";
  auto n = parse_email(nested, EmailFormat::eml);
  REQUIRE(n.has_value());
  CHECK(n->body.find("hello from base64") != std::string::npos);
  CHECK(n->has_attachment);
  CHECK(n->has_html);  // the alternative part was seen even if plain text won
}
