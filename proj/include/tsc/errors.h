#pragma once

#include <stdexcept>
#include <string>

namespace tsc {

    class Error : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
    };

    // netmodel
    class ParseError : public Error {
    public:
        using Error::Error;
    };

    class TopologyError : public Error {
    public:
        using Error::Error;
    };

    class RouteError : public Error {
    public:
        using Error::Error;
    };

    // simcore
    class NotSwitchTime : public Error {
    public:
        using Error::Error;
    };

    class InvalidPhase : public Error {
    public:
        using Error::Error;
    };

    // prompting
    class TemplateError : public Error {
    public:
        using Error::Error;
    };

    // agents
    class InvalidOrder : public Error {
    public:
        using Error::Error;
    };

    // llmclient
    class BackendError : public Error {
    public:
        using Error::Error;
    };

    class AuthError : public BackendError {
    public:
        using BackendError::BackendError;
    };

    // critic
    class ShapeError : public Error {
    public:
        using Error::Error;
    };

    class DivergenceError : public Error {
    public:
        using Error::Error;
    };

    // finetune
    class EmptySequence : public Error {
    public:
        using Error::Error;
    };

    class MissingLogProbs : public Error {
    public:
        using Error::Error;
    };

    // metrics
    class NoVehicles : public Error {
    public:
        using Error::Error;
    };

    // configuration / files
    class ConfigError : public Error {
    public:
        using Error::Error;
    };

    class IoError : public Error {
    public:
        using Error::Error;
    };

}
