#include "rcurv/expr.hpp"
#include "rcurv/space.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace rcurv;

TEST(Parse, ProductRoot)
{
    const Expr e = parse_expr("sin(x0)*cos(x1)", 2);
    EXPECT_EQ(e.root().op, Op::Mul);
    EXPECT_DOUBLE_EQ(e.eval(std::vector<double>{0.5, 0.25}), std::sin(0.5) * std::cos(0.25));
}

TEST(Parse, PrecedenceAndAssociativity)
{
    const std::vector<double> p{2.0};
    EXPECT_DOUBLE_EQ(parse_expr("1+2*3", 1).eval(p), 7.0);
    EXPECT_DOUBLE_EQ(parse_expr("8/4/2", 1).eval(p), 1.0);
    EXPECT_DOUBLE_EQ(parse_expr("2^3^2", 1).eval(p), 512.0);
    EXPECT_DOUBLE_EQ(parse_expr("-x0^2", 1).eval(p), -4.0);
    EXPECT_DOUBLE_EQ(parse_expr("x0^-1", 1).eval(p), 0.5);
    EXPECT_DOUBLE_EQ(parse_expr("x0^0.5", 1).eval(p), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(parse_expr("x0^x0", 1).eval(p), 4.0);
    EXPECT_DOUBLE_EQ(parse_expr("1.5e1 - .5", 1).eval(p), 14.5);
}

TEST(Parse, ParametersResolveAtParseTime)
{
    const Expr e = parse_expr("a*x0 + b", 1, {{"a", 3.0}, {"b", -1.0}});
    EXPECT_TRUE(e.root().op == Op::Add);
    EXPECT_DOUBLE_EQ(e.eval(std::vector<double>{2.0}), 5.0);
    EXPECT_DOUBLE_EQ(parse_expr("pi", 1).eval(std::vector<double>{0.0}), std::numbers::pi);
}

TEST(Parse, CoordinateAliases)
{
    const auto sphere = make_backend("sphere");
    const Expr e = sphere.parse("cos(theta)*phi");
    EXPECT_DOUBLE_EQ(e.eval(std::vector<double>{0.0, 2.0}), 2.0);
}

TEST(Parse, SyntaxErrorsCarryPosition)
{
    try {
        parse_expr("sin(x0", 1);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 6u);
    }
    try {
        parse_expr("x0 + * x0", 1);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 5u);
    }
    EXPECT_THROW(parse_expr("", 1), ParseError);
    EXPECT_THROW(parse_expr("x0 x0", 1), ParseError);
    EXPECT_THROW(parse_expr("3 $ 4", 1), ParseError);
}

TEST(Parse, UnknownIdentifiers)
{
    EXPECT_THROW(parse_expr("x2", 2), ParseError);
    EXPECT_THROW(parse_expr("y", 2), ParseError);
    EXPECT_THROW(parse_expr("sinh(x0)", 1), ParseError);
}

TEST(Parse, WrongArity)
{
    EXPECT_THROW(parse_expr("sin(x0, x1)", 2), ParseError);
    EXPECT_THROW(parse_expr("exp()", 1), ParseError);
    EXPECT_THROW(parse_expr("cos + 1", 1), ParseError);
}

TEST(Eval, PoleIsADomainError)
{
    const Expr e = parse_expr("1/(1-x0)", 1);
    EXPECT_DOUBLE_EQ(e.eval(std::vector<double>{0.5}), 2.0);
    try {
        e.eval_jet(std::vector<double>{1.0}, 2);
        FAIL();
    } catch (const DomainError& err) {
        EXPECT_NE(std::string(err.what()).find("(1-x0)"), std::string::npos);
    }
}

TEST(Eval, DomainViolations)
{
    const std::vector<double> p{-1.0};
    EXPECT_THROW(parse_expr("log(x0)", 1).eval(p), DomainError);
    EXPECT_THROW(parse_expr("sqrt(x0)", 1).eval(p), DomainError);
    EXPECT_THROW(parse_expr("x0^0.5", 1).eval(p), DomainError);
    EXPECT_THROW(parse_expr("x0^x0", 1).eval(p), DomainError);
    EXPECT_THROW(parse_expr("sqrt(x0-x0)", 1).eval_jet(p, 1), DomainError);
    EXPECT_DOUBLE_EQ(parse_expr("x0^3", 1).eval(p), -1.0);
}

TEST(Eval, BumpSupport)
{
    const Expr e = parse_expr("bump((x0*x0+x1*x1)/0.81)", 2);
    EXPECT_EQ(e.eval(std::vector<double>{0.9, 0.0}), 0.0);
    EXPECT_EQ(e.eval(std::vector<double>{0.7, 0.7}), 0.0);
    EXPECT_GT(e.eval(std::vector<double>{0.5, 0.5}), 0.0);
}

TEST(Eval, ToStringRoundTrips)
{
    const Expr e = parse_expr("-sin(x0)^2/(1.25+x1) - 3*bump(x0)", 2);
    const Expr f = parse_expr(e.to_string(), 2);
    const std::vector<double> p{0.3, 0.6};
    EXPECT_EQ(e.eval(p), f.eval(p));
}

TEST(Periodicity, PeriodicFunctionOnTorus)
{
    const auto torus = make_backend("torus");
    EXPECT_TRUE(periodicity_check(torus.parse("sin(x0)"), torus, 1e-9));
    EXPECT_TRUE(periodicity_check(torus.parse("cos(2*x0+3*x1)*sin(x1)"), torus, 1e-9));
}

TEST(Periodicity, NonPeriodicFunctionOnTorus)
{
    const auto torus = make_backend("torus");
    EXPECT_FALSE(periodicity_check(torus.parse("x0"), torus, 1e-9));
    EXPECT_FALSE(periodicity_check(torus.parse("sin(x0/2)"), torus, 1e-9));
}

TEST(Periodicity, CompactSupportOnBox)
{
    const auto box = make_backend("euclidean");
    EXPECT_TRUE(periodicity_check(box.parse("bump((x0*x0+x1*x1)/0.81)"), box, 1e-9));
    EXPECT_FALSE(periodicity_check(box.parse("x0*x1"), box, 1e-9));
}

TEST(Periodicity, PolesOfTheSphereAreCollapsedFaces)
{
    const auto sphere = make_backend("sphere");
    EXPECT_TRUE(periodicity_check(sphere.parse("cos(theta)"), sphere, 1e-9));
    EXPECT_FALSE(periodicity_check(sphere.parse("phi"), sphere, 1e-9));
}
